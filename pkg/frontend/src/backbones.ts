/**
 * Known backbone CNNs: the width of the last hidden fully-connected
 * activation (what the exporter emits) and the expected input size.
 *
 * The exporter aborts when a loaded model's feature width disagrees with
 * the registry entry for its declared name, so a wrong checkpoint cannot
 * silently produce misdimensioned exports.
 */

export interface BackboneSpec {
  /** width of the penultimate (last hidden fully-connected) activation */
  featureWidth: number
  inputSize: number
}

export const BACKBONES: Record<string, BackboneSpec> = {
  'mobilenet-v3-small': { featureWidth: 1024, inputSize: 224 },
  'mobilenet-v3-large': { featureWidth: 1280, inputSize: 224 },
  'efficientnet-b0': { featureWidth: 1280, inputSize: 224 },
  'efficientnet-b1': { featureWidth: 1280, inputSize: 240 },
  'resnet-18': { featureWidth: 512, inputSize: 224 },
}

export function backboneSpec(name: string): BackboneSpec {
  const spec = BACKBONES[name]
  if (!spec) {
    const known = Object.keys(BACKBONES).sort().join(', ')
    throw new Error(`unknown backbone ${JSON.stringify(name)}; known: ${known}`)
  }
  return spec
}
