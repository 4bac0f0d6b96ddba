/**
 * Exporter command line. Exit codes: 0 ok, 1 usage, 2 runtime/data error;
 * failures print one JSON object on stderr.
 */

import { exportDataset } from './export'
import { readManifest } from './format'
import { renderContactSheet, ExplanationDocument } from './contact-sheet'
import * as fs from 'fs'

interface Flags {
  [key: string]: string
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = {}
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]
    if (!key.startsWith('--') || i + 1 >= argv.length) {
      throw new UsageError(`malformed arguments near ${JSON.stringify(key)}`)
    }
    flags[key.slice(2)] = argv[i + 1]
  }
  return flags
}

class UsageError extends Error {}

function required(flags: Flags, name: string): string {
  const value = flags[name]
  if (value === undefined) throw new UsageError(`--${name} is required`)
  return value
}

async function runExport(argv: string[]): Promise<void> {
  const flags = parseFlags(argv)
  const result = await exportDataset({
    datasetDir: required(flags, 'dataset'),
    backboneName: required(flags, 'backbone'),
    modelDir: required(flags, 'model-path'),
    outputPrefix: required(flags, 'out'),
    testEvery: flags['test-every'] ? parseInt(flags['test-every'], 10) : undefined,
  })
  process.stdout.write(
    JSON.stringify({
      features: result.featurePath,
      manifest: result.manifestPath,
      count: result.count,
      dimension: result.dimension,
      feature_layer: result.featureLayerName,
      skipped: result.skipped,
    }) + '\n',
  )
}

async function runContactSheet(argv: string[]): Promise<void> {
  const flags = parseFlags(argv)
  const explanation = JSON.parse(
    fs.readFileSync(required(flags, 'explanation'), 'utf-8'),
  ) as ExplanationDocument
  const manifest = readManifest(required(flags, 'manifest'))
  const layout = renderContactSheet({
    explanation,
    manifest,
    imageRoot: required(flags, 'image-root'),
    outPath: required(flags, 'out'),
  })
  process.stdout.write(JSON.stringify({ out: flags['out'], ...layout }) + '\n')
}

export async function main(argv: string[]): Promise<number> {
  try {
    const [command, ...rest] = argv
    if (command === 'export') {
      await runExport(rest)
      return 0
    }
    if (command === 'contact-sheet') {
      await runContactSheet(rest)
      return 0
    }
    throw new UsageError(`unknown command ${JSON.stringify(command ?? '')}; use export | contact-sheet`)
  } catch (error) {
    const isUsage = error instanceof UsageError
    process.stderr.write(
      JSON.stringify({
        error: isUsage ? 'Usage' : (error as Error).constructor.name,
        message: (error as Error).message,
      }) + '\n',
    )
    return isUsage ? 1 : 2
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => process.exit(code))
}
