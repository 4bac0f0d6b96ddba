/**
 * Deterministic fixtures: tiny PNG datasets with label-dependent patterns
 * and a small CNN backbone with seeded weights saved in the tfjs-layers
 * artifact format. No network access anywhere.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'
import { PNG } from 'pngjs'

import { fileSaveHandler } from '../src/model'

export function lcg(seed: number): () => number {
  let state = seed >>> 0
  return () => {
    state = (1664525 * state + 1013904223) >>> 0
    return state / 2 ** 32
  }
}

export function writePatternPng(
  filePath: string,
  label: number,
  seed: number,
  size = 32,
): void {
  const png = new PNG({ width: size, height: size })
  const rand = lcg(seed)
  const base = [(label * 37 + 30) % 256, (label * 91 + 50) % 256, (label * 143 + 100) % 256]
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const offset = (y * size + x) * 4
      const texture = (x * (label + 3) + y * (2 * label + 5)) % 64
      for (let c = 0; c < 3; c++) {
        const noise = Math.floor(rand() * 40) - 20
        png.data[offset + c] = Math.min(255, Math.max(0, base[c] + texture + noise))
      }
      png.data[offset + 3] = 255
    }
  }
  fs.writeFileSync(filePath, PNG.sync.write(png))
}

export interface DatasetSpec {
  labels: string[]
  imagesPerLabel: number
  withInstances?: boolean
  brokenImage?: boolean
}

/** Lay out <root>/<label>/<image>.png with deterministic content. */
export function writeDataset(root: string, spec: DatasetSpec): void {
  fs.mkdirSync(root, { recursive: true })
  spec.labels.forEach((label, labelIndex) => {
    const dir = path.join(root, label)
    fs.mkdirSync(dir, { recursive: true })
    for (let i = 0; i < spec.imagesPerLabel; i++) {
      const name = spec.withInstances
        ? `inst${i % 2}__img${String(i).padStart(2, '0')}.png`
        : `img${String(i).padStart(2, '0')}.png`
      writePatternPng(path.join(dir, name), labelIndex, labelIndex * 1000 + i)
    }
  })
  if (spec.brokenImage) {
    fs.writeFileSync(path.join(root, spec.labels[0], 'zz-broken.png'), Buffer.from('not a png'))
  }
}

/**
 * A small convolutional backbone ending in GAP -> Dense(featureWidth) ->
 * Dense(classes): the Dense(featureWidth) output is the last hidden
 * fully-connected activation the exporter should emit.
 */
export function buildTestBackbone(featureWidth: number, inputSize = 224, classes = 7): tf.LayersModel {
  const model = tf.sequential()
  model.add(
    tf.layers.conv2d({
      filters: 4,
      kernelSize: 7,
      strides: 8,
      activation: 'relu',
      inputShape: [inputSize, inputSize, 3],
      name: 'stem_conv',
    }),
  )
  model.add(tf.layers.globalAveragePooling2d({ name: 'pool' }))
  model.add(tf.layers.dense({ units: featureWidth, activation: 'relu', name: 'hidden_fc' }))
  model.add(tf.layers.dense({ units: classes, activation: 'softmax', name: 'head' }))

  const rand = lcg(987654321)
  const seeded = model.getWeights().map((w) => {
    const values = new Float32Array(w.size)
    for (let i = 0; i < values.length; i++) values[i] = (rand() - 0.5) * 0.6
    return tf.tensor(values, w.shape)
  })
  model.setWeights(seeded)
  return model
}

export async function saveTestBackbone(
  modelDir: string,
  featureWidth: number,
  inputSize = 224,
): Promise<void> {
  const model = buildTestBackbone(featureWidth, inputSize)
  await model.save(fileSaveHandler(modelDir))
}
