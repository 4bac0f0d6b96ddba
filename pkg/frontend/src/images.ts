/**
 * PNG decoding and deterministic preprocessing to model input tensors.
 *
 * Pixels are scaled to [0, 1] and bilinearly resized to the backbone's
 * square input size. Alpha is dropped. Everything here is synchronous and
 * deterministic so repeated exports are bitwise identical.
 */

import * as fs from 'fs'
import * as tf from '@tensorflow/tfjs'
import { PNG } from 'pngjs'

export interface DecodedImage {
  width: number
  height: number
  /** RGB float32 in [0, 1], row-major */
  data: Float32Array
}

export function decodePng(filePath: string): DecodedImage {
  const png = PNG.sync.read(fs.readFileSync(filePath))
  const pixels = png.width * png.height
  const data = new Float32Array(pixels * 3)
  for (let i = 0; i < pixels; i++) {
    data[i * 3] = png.data[i * 4] / 255
    data[i * 3 + 1] = png.data[i * 4 + 1] / 255
    data[i * 3 + 2] = png.data[i * 4 + 2] / 255
  }
  return { width: png.width, height: png.height, data }
}

export function toInputTensor(image: DecodedImage, inputSize: number): tf.Tensor3D {
  return tf.tidy(() => {
    const full = tf.tensor3d(image.data, [image.height, image.width, 3])
    if (image.height === inputSize && image.width === inputSize) {
      return full.clone()
    }
    return tf.image.resizeBilinear(full, [inputSize, inputSize])
  })
}

export function loadImageTensor(filePath: string, inputSize: number): tf.Tensor3D {
  return toInputTensor(decodePng(filePath), inputSize)
}
