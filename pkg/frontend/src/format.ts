/**
 * Binary feature-file writer/reader and manifest writer.
 *
 * The layout must stay bit-identical to the engine's storage module
 * (docs/formats.md in the repository root): 24-byte little-endian header
 * `EXLLFEAT | u16 version | u32 dimension | u64 count | u16 dtype` followed
 * by row-major float32 payload. Writes are atomic (temp file + rename).
 */

import * as fs from 'fs'
import * as path from 'path'

export const FEATURE_MAGIC = 'EXLLFEAT'
export const FEATURE_VERSION = 1
export const DTYPE_F32LE = 1
export const HEADER_SIZE = 24

export interface ManifestSample {
  sample_id: string
  label: string
  row_index: number
  split: 'train' | 'test'
  instance_id?: string
  session_id?: string
}

export interface ManifestDocument {
  schema_version: 1
  dataset: string
  features: string
  samples: ManifestSample[]
  exporter?: {
    backbone: string
    feature_layer: string
    input_size: number
  }
}

export function atomicWrite(filePath: string, data: Buffer | string): void {
  const dir = path.dirname(path.resolve(filePath))
  const tmp = path.join(dir, `.tmp-${process.pid}-${Date.now()}-${Math.random().toString(36).slice(2)}.part`)
  fs.writeFileSync(tmp, data)
  fs.renameSync(tmp, filePath)
}

export function encodeFeatures(rows: Float32Array[], dimension: number): Buffer {
  const count = rows.length
  const header = Buffer.alloc(HEADER_SIZE)
  header.write(FEATURE_MAGIC, 0, 'ascii')
  header.writeUInt16LE(FEATURE_VERSION, 8)
  header.writeUInt32LE(dimension, 10)
  header.writeBigUInt64LE(BigInt(count), 14)
  header.writeUInt16LE(DTYPE_F32LE, 22)
  const payload = Buffer.alloc(count * dimension * 4)
  rows.forEach((row, i) => {
    if (row.length !== dimension) {
      throw new Error(`row ${i} has ${row.length} values, expected ${dimension}`)
    }
    for (let j = 0; j < dimension; j++) {
      payload.writeFloatLE(row[j], (i * dimension + j) * 4)
    }
  })
  return Buffer.concat([header, payload])
}

export function writeFeatures(filePath: string, rows: Float32Array[], dimension: number): void {
  atomicWrite(filePath, encodeFeatures(rows, dimension))
}

export interface FeatureFile {
  dimension: number
  count: number
  rows: Float32Array[]
}

export function readFeatures(filePath: string): FeatureFile {
  const raw = fs.readFileSync(filePath)
  if (raw.length < HEADER_SIZE) {
    throw new Error(`${filePath}: ${raw.length} bytes, header alone needs ${HEADER_SIZE}`)
  }
  const magic = raw.toString('ascii', 0, 8)
  if (magic !== FEATURE_MAGIC) {
    throw new Error(`${filePath}: bad magic ${JSON.stringify(magic)}`)
  }
  const version = raw.readUInt16LE(8)
  if (version !== FEATURE_VERSION) {
    throw new Error(`${filePath}: unsupported version ${version}`)
  }
  const dimension = raw.readUInt32LE(10)
  const count = Number(raw.readBigUInt64LE(14))
  const dtype = raw.readUInt16LE(22)
  if (dtype !== DTYPE_F32LE) {
    throw new Error(`${filePath}: unsupported dtype tag ${dtype}`)
  }
  const expected = count * dimension * 4
  if (raw.length - HEADER_SIZE !== expected) {
    throw new Error(
      `${filePath}: payload holds ${raw.length - HEADER_SIZE} bytes, header promises ${expected}`,
    )
  }
  const rows: Float32Array[] = []
  for (let i = 0; i < count; i++) {
    const row = new Float32Array(dimension)
    for (let j = 0; j < dimension; j++) {
      row[j] = raw.readFloatLE(HEADER_SIZE + (i * dimension + j) * 4)
    }
    rows.push(row)
  }
  return { dimension, count, rows }
}

/** Stable-key JSON so identical exports are byte-identical. */
export function canonicalJson(value: unknown): string {
  const order = (v: unknown): unknown => {
    if (Array.isArray(v)) return v.map(order)
    if (v !== null && typeof v === 'object') {
      const out: Record<string, unknown> = {}
      for (const key of Object.keys(v as Record<string, unknown>).sort()) {
        out[key] = order((v as Record<string, unknown>)[key])
      }
      return out
    }
    return v
  }
  return JSON.stringify(order(value), null, 2) + '\n'
}

export function writeManifest(filePath: string, document: ManifestDocument): void {
  atomicWrite(filePath, canonicalJson(document))
}

export function readManifest(filePath: string): ManifestDocument {
  return JSON.parse(fs.readFileSync(filePath, 'utf-8')) as ManifestDocument
}
