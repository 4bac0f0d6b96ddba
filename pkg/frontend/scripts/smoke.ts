/**
 * End-to-end smoke: export a 5-class synthetic image set with a locally
 * built backbone, then drive the Python engine's bench command over the
 * exported files for the fused prototype learner and the nearest-class-mean
 * baseline. Passes when the pipeline completes and the fused learner is not
 * meaningfully worse than the baseline.
 *
 * With network access and a converted pretrained checkpoint the same flow
 * runs against real backbones; this script stays offline by design.
 */

import { spawnSync } from 'node:child_process'
import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'

import { exportDataset } from '../src/export'
import { saveTestBackbone, writeDataset } from '../test/fixtures'

export interface SmokeResult {
  protoAccuracy: number
  ncmAccuracy: number
}

function benchAccuracy(manifestPath: string, learner: string, inference: string, outPrefix: string): number {
  const config = {
    learner,
    inference,
    ordering_kind: 'iid',
    permutations: 1,
    base_seed: 0,
    manifest: manifestPath,
    out_prefix: outPrefix,
  }
  const configPath = `${outPrefix}.config.json`
  fs.writeFileSync(configPath, JSON.stringify(config))
  const result = spawnSync('python3', ['-m', 'protostream.cli', 'bench', '--config', configPath], {
    encoding: 'utf-8',
  })
  if (result.status !== 0) {
    throw new Error(`bench failed for ${learner}: ${result.stderr}`)
  }
  const summary = JSON.parse(result.stdout)
  return summary.top1_accuracy as number
}

export async function runSmoke(): Promise<SmokeResult> {
  const probe = spawnSync('python3', ['-c', 'import protostream'], { encoding: 'utf-8' })
  if (probe.status !== 0) {
    throw new Error('python engine not importable; install the root package first')
  }
  const root = fs.mkdtempSync(path.join(os.tmpdir(), 'psx-smoke-'))
  const datasetDir = path.join(root, 'household')
  const modelDir = path.join(root, 'backbone')
  writeDataset(datasetDir, {
    labels: ['bottle', 'box', 'brush', 'mug', 'sponge'],
    imagesPerLabel: 10,
  })
  await saveTestBackbone(modelDir, 512)
  const exported = await exportDataset({
    datasetDir,
    backboneName: 'resnet-18',
    modelDir,
    outputPrefix: path.join(root, 'household'),
    log: () => undefined,
  })
  if (exported.count !== 50) {
    throw new Error(`expected 50 exported rows, got ${exported.count}`)
  }
  const protoAccuracy = benchAccuracy(exported.manifestPath, 'proto', 'fuse', path.join(root, 'proto'))
  const ncmAccuracy = benchAccuracy(exported.manifestPath, 'ncm', 'fuse', path.join(root, 'ncm'))
  return { protoAccuracy, ncmAccuracy }
}

if (require.main === module) {
  runSmoke()
    .then((result) => {
      const ok = result.protoAccuracy >= result.ncmAccuracy - 0.05
      process.stdout.write(
        JSON.stringify({ ...result, pass: ok }) + '\n',
      )
      process.exit(ok ? 0 : 2)
    })
    .catch((error) => {
      process.stderr.write(JSON.stringify({ error: error.message }) + '\n')
      process.exit(2)
    })
}
