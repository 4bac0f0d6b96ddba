/**
 * Dataset export: walk a directory of images organized one subdirectory per
 * label, run the backbone, and write the feature file + manifest the engine
 * consumes. Vectors are written raw; the engine owns normalization, so one
 * export serves every learner identically.
 */

import * as fs from 'fs'
import * as path from 'path'
import * as tf from '@tensorflow/tfjs'

import { backboneSpec } from './backbones'
import { loadImageTensor } from './images'
import { extractFeatures, loadBackbone } from './model'
import { ManifestSample, writeFeatures, writeManifest } from './format'

export interface ExportOptions {
  datasetDir: string
  backboneName: string
  /** directory holding model.json + weight shards */
  modelDir: string
  outputPrefix: string
  /** every Nth image per label lands in the test split (default 5) */
  testEvery?: number
  batchSize?: number
  log?: (message: string) => void
}

export interface ExportResult {
  featurePath: string
  manifestPath: string
  count: number
  dimension: number
  skipped: string[]
  featureLayerName: string
}

interface PendingImage {
  sampleId: string
  label: string
  filePath: string
  split: 'train' | 'test'
  instanceId?: string
}

function listDataset(datasetDir: string, testEvery: number): PendingImage[] {
  const labels = fs
    .readdirSync(datasetDir, { withFileTypes: true })
    .filter((e) => e.isDirectory())
    .map((e) => e.name)
    .sort()
  if (labels.length === 0) {
    throw new Error(`dataset directory ${datasetDir} has no label subdirectories`)
  }
  const pending: PendingImage[] = []
  for (const label of labels) {
    const dir = path.join(datasetDir, label)
    const images = fs
      .readdirSync(dir)
      .filter((name) => name.toLowerCase().endsWith('.png'))
      .sort()
    images.forEach((name, index) => {
      // optional instance prefix: "<instance>__rest.png"
      const marker = name.indexOf('__')
      const entry: PendingImage = {
        sampleId: `${label}/${name}`,
        label,
        filePath: path.join(dir, name),
        split: (index + 1) % testEvery === 0 ? 'test' : 'train',
      }
      if (marker > 0) entry.instanceId = name.slice(0, marker)
      pending.push(entry)
    })
  }
  return pending
}

export async function exportDataset(options: ExportOptions): Promise<ExportResult> {
  const log = options.log ?? ((m: string) => console.warn(m))
  const testEvery = options.testEvery ?? 5
  const batchSize = options.batchSize ?? 8
  const spec = backboneSpec(options.backboneName)
  const backbone = await loadBackbone(options.backboneName, options.modelDir, spec.featureWidth)

  const pending = listDataset(options.datasetDir, testEvery)
  const rows: Float32Array[] = []
  const samples: ManifestSample[] = []
  const skipped: string[] = []

  for (let start = 0; start < pending.length; start += batchSize) {
    const chunk = pending.slice(start, start + batchSize)
    const tensors: tf.Tensor3D[] = []
    const kept: PendingImage[] = []
    for (const item of chunk) {
      try {
        tensors.push(loadImageTensor(item.filePath, spec.inputSize))
        kept.push(item)
      } catch (error) {
        skipped.push(item.sampleId)
        log(`skipping unreadable image ${item.sampleId}: ${(error as Error).message}`)
      }
    }
    if (kept.length === 0) continue
    const batch = tf.stack(tensors) as tf.Tensor4D
    tensors.forEach((t) => t.dispose())
    const features = extractFeatures(backbone, batch)
    batch.dispose()
    kept.forEach((item, i) => {
      const sample: ManifestSample = {
        sample_id: item.sampleId,
        label: item.label,
        row_index: rows.length,
        split: item.split,
      }
      if (item.instanceId !== undefined) sample.instance_id = item.instanceId
      rows.push(features[i])
      samples.push(sample)
    })
  }

  if (rows.length === 0) {
    throw new Error('no readable images; nothing to export')
  }

  const featurePath = `${options.outputPrefix}.feat`
  const manifestPath = `${options.outputPrefix}.manifest.json`
  writeFeatures(featurePath, rows, backbone.featureWidth)
  writeManifest(manifestPath, {
    schema_version: 1,
    dataset: path.basename(options.datasetDir),
    features: path.basename(featurePath),
    samples,
    exporter: {
      backbone: options.backboneName,
      feature_layer: backbone.featureLayerName,
      input_size: spec.inputSize,
    },
  })
  return {
    featurePath,
    manifestPath,
    count: rows.length,
    dimension: backbone.featureWidth,
    skipped,
    featureLayerName: backbone.featureLayerName,
  }
}
