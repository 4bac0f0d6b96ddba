/**
 * Backbone loading and penultimate-feature extraction.
 *
 * Models are tfjs Layers artifacts on local disk (model.json plus weight
 * shards). The feature layer is resolved as the input of the final Dense
 * (classification) layer — the last hidden fully-connected activation —
 * and its name is recorded in the manifest rather than guessing one rule
 * for every architecture.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

export interface LoadedBackbone {
  name: string
  model: tf.LayersModel
  extractor: tf.LayersModel
  featureLayerName: string
  featureWidth: number
}

/** Read a tfjs-layers artifact directory (model.json + shard files). */
export function fileLoadHandler(modelDir: string): tf.io.IOHandler {
  return {
    load: async () => {
      const manifestPath = path.join(modelDir, 'model.json')
      const modelJson = JSON.parse(fs.readFileSync(manifestPath, 'utf-8'))
      const weightSpecs: tf.io.WeightsManifestEntry[] = []
      const buffers: Buffer[] = []
      for (const group of modelJson.weightsManifest ?? []) {
        weightSpecs.push(...group.weights)
        for (const shard of group.paths) {
          buffers.push(fs.readFileSync(path.join(modelDir, shard)))
        }
      }
      const merged = Buffer.concat(buffers)
      const weightData = merged.buffer.slice(
        merged.byteOffset,
        merged.byteOffset + merged.byteLength,
      )
      return {
        modelTopology: modelJson.modelTopology,
        weightSpecs,
        weightData,
      }
    },
  }
}

/** Write a tfjs-layers artifact directory (model.json + weights.bin). */
export function fileSaveHandler(modelDir: string): tf.io.IOHandler {
  return {
    save: async (artifacts: tf.io.ModelArtifacts) => {
      fs.mkdirSync(modelDir, { recursive: true })
      const weightData = artifacts.weightData as ArrayBuffer
      fs.writeFileSync(path.join(modelDir, 'weights.bin'), Buffer.from(weightData))
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: 'layers-model',
        generatedBy: 'protostream-exporter',
        convertedBy: null,
        weightsManifest: [
          { paths: ['weights.bin'], weights: artifacts.weightSpecs },
        ],
      }
      fs.writeFileSync(path.join(modelDir, 'model.json'), JSON.stringify(modelJson))
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON' as const,
        },
      }
    },
  }
}

function lastDimension(shape: (number | null)[] | (number | null)[][]): number {
  const flat = shape as (number | null)[]
  const last = flat[flat.length - 1]
  if (typeof last !== 'number') {
    throw new Error(`feature layer has unresolved output width (shape ${JSON.stringify(shape)})`)
  }
  return last
}

/**
 * The feature tensor is whatever feeds the model's final Dense layer.
 * Returns the extractor sub-model plus the resolved layer name and width.
 */
export function resolveFeatureExtractor(model: tf.LayersModel): {
  extractor: tf.LayersModel
  featureLayerName: string
  featureWidth: number
} {
  const layers = model.layers
  let headIndex = -1
  for (let i = layers.length - 1; i >= 0; i--) {
    if (layers[i].getClassName() === 'Dense') {
      headIndex = i
      break
    }
  }
  if (headIndex <= 0) {
    throw new Error('model has no Dense classification head to strip')
  }
  const head = layers[headIndex]
  const input = head.input
  const featureTensor = (Array.isArray(input) ? input[0] : input) as tf.SymbolicTensor
  const featureLayerName = featureTensor.sourceLayer.name
  const featureWidth = lastDimension(featureTensor.shape)
  const extractor = tf.model({ inputs: model.inputs, outputs: featureTensor })
  return { extractor, featureLayerName, featureWidth }
}

export async function loadBackbone(
  name: string,
  modelDir: string,
  expectedWidth: number,
): Promise<LoadedBackbone> {
  const model = await tf.loadLayersModel(fileLoadHandler(modelDir))
  const { extractor, featureLayerName, featureWidth } = resolveFeatureExtractor(model)
  if (featureWidth !== expectedWidth) {
    throw new Error(
      `backbone ${name}: feature width ${featureWidth} does not match the ` +
        `registry's penultimate width ${expectedWidth}; aborting export`,
    )
  }
  return { name, model, extractor, featureLayerName, featureWidth }
}

/** Run the extractor over a batch of image tensors; rows are raw float32. */
export function extractFeatures(backbone: LoadedBackbone, batch: tf.Tensor4D): Float32Array[] {
  const out = tf.tidy(() => backbone.extractor.predict(batch) as tf.Tensor)
  const data = out.dataSync() as Float32Array
  const [n, width] = [out.shape[0], backbone.featureWidth]
  out.dispose()
  const rows: Float32Array[] = []
  for (let i = 0; i < n; i++) {
    rows.push(data.slice(i * width, (i + 1) * width))
  }
  return rows
}
