/**
 * Render an explanation document as an image grid: the query image on top,
 * then one row each for hits, near hits, and near misses. A row whose member
 * list is absent is omitted but keeps its caption with a (NONE) marker;
 * members whose image files cannot be resolved render as placeholder tiles.
 */

import * as fs from 'fs'
import * as path from 'path'
import { PNG } from 'pngjs'

import { decodePng } from './images'
import { ManifestDocument } from './format'
import { Surface, drawText } from './font'

export interface ExplanationDocument {
  schema_version: number
  query_id: string | null
  predicted: number
  runner_up: number | null
  hits: string[]
  near_hits: string[] | null
  near_misses: string[] | null
}

export interface SheetOptions {
  explanation: ExplanationDocument
  manifest: ManifestDocument
  imageRoot: string
  outPath: string
  tileSize?: number
  maxTilesPerRow?: number
  log?: (message: string) => void
}

export interface SheetLayout {
  width: number
  height: number
  rows: { caption: string; tiles: number; placeholders: number }[]
}

const PAD = 4
const CAPTION_HEIGHT = 18

function fillRect(
  surface: Surface,
  x: number,
  y: number,
  w: number,
  h: number,
  rgb: [number, number, number],
): void {
  for (let py = y; py < y + h; py++) {
    for (let px = x; px < x + w; px++) {
      if (px < 0 || py < 0 || px >= surface.width || py >= surface.height) continue
      const offset = (py * surface.width + px) * 4
      surface.data[offset] = rgb[0]
      surface.data[offset + 1] = rgb[1]
      surface.data[offset + 2] = rgb[2]
      surface.data[offset + 3] = 255
    }
  }
}

/** Nearest-neighbor thumbnail blit; good enough for a contact sheet. */
function blitImage(surface: Surface, filePath: string, x: number, y: number, size: number): void {
  const image = decodePng(filePath)
  for (let py = 0; py < size; py++) {
    const sy = Math.min(image.height - 1, Math.floor((py / size) * image.height))
    for (let px = 0; px < size; px++) {
      const sx = Math.min(image.width - 1, Math.floor((px / size) * image.width))
      const src = (sy * image.width + sx) * 3
      const dst = ((y + py) * surface.width + (x + px)) * 4
      surface.data[dst] = Math.round(image.data[src] * 255)
      surface.data[dst + 1] = Math.round(image.data[src + 1] * 255)
      surface.data[dst + 2] = Math.round(image.data[src + 2] * 255)
      surface.data[dst + 3] = 255
    }
  }
}

function blitPlaceholder(surface: Surface, x: number, y: number, size: number): void {
  fillRect(surface, x, y, size, size, [160, 160, 160])
  for (let i = 0; i < size; i++) {
    for (const j of [i, size - 1 - i]) {
      const dst = ((y + i) * surface.width + (x + j)) * 4
      surface.data[dst] = 90
      surface.data[dst + 1] = 90
      surface.data[dst + 2] = 90
    }
  }
}

export function renderContactSheet(options: SheetOptions): SheetLayout {
  const log = options.log ?? ((m: string) => console.warn(m))
  const tile = options.tileSize ?? 64
  const maxTiles = options.maxTilesPerRow ?? 8
  const byId = new Map(options.manifest.samples.map((s) => [s.sample_id, s]))

  const resolve = (sampleId: string): string | null => {
    if (!byId.has(sampleId)) return null
    const candidate = path.join(options.imageRoot, sampleId)
    return fs.existsSync(candidate) ? candidate : null
  }

  interface RowPlan {
    caption: string
    members: string[] | null
  }
  const queryMembers = options.explanation.query_id === null ? [] : [options.explanation.query_id]
  const plans: RowPlan[] = [
    { caption: 'QUERY', members: queryMembers },
    { caption: 'HITS', members: options.explanation.hits.slice(0, maxTiles) },
    { caption: 'NEAR HITS', members: options.explanation.near_hits?.slice(0, maxTiles) ?? null },
    { caption: 'NEAR MISSES', members: options.explanation.near_misses?.slice(0, maxTiles) ?? null },
  ]

  const widestRow = Math.max(1, ...plans.map((p) => (p.members ?? []).length))
  const width = PAD + widestRow * (tile + PAD)
  let height = PAD
  for (const plan of plans) {
    height += CAPTION_HEIGHT
    if (plan.members !== null && plan.members.length > 0) height += tile + PAD
  }

  const surface: Surface = {
    width,
    height,
    data: Buffer.alloc(width * height * 4),
  }
  fillRect(surface, 0, 0, width, height, [245, 245, 245])

  const layout: SheetLayout = { width, height, rows: [] }
  let cursorY = PAD
  for (const plan of plans) {
    const caption = plan.members === null ? `${plan.caption} (NONE)` : plan.caption
    drawText(surface, caption, PAD, cursorY + 2)
    cursorY += CAPTION_HEIGHT
    let tiles = 0
    let placeholders = 0
    if (plan.members !== null && plan.members.length > 0) {
      plan.members.forEach((memberId, index) => {
        const x = PAD + index * (tile + PAD)
        const file = resolve(memberId)
        if (file === null) {
          blitPlaceholder(surface, x, cursorY, tile)
          placeholders += 1
          log(`missing image for ${memberId}; placeholder tile used`)
        } else {
          blitImage(surface, file, x, cursorY, tile)
        }
        tiles += 1
      })
      cursorY += tile + PAD
    }
    layout.rows.push({ caption, tiles, placeholders })
  }

  const png = new PNG({ width, height })
  surface.data.copy(png.data)
  fs.writeFileSync(options.outPath, PNG.sync.write(png))
  return layout
}
