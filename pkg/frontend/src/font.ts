/**
 * Minimal 5x7 bitmap glyphs for contact-sheet captions. Only the characters
 * used by the fixed caption strings are defined.
 */

const GLYPHS: Record<string, string[]> = {
  A: ['01110', '10001', '10001', '11111', '10001', '10001', '10001'],
  E: ['11111', '10000', '10000', '11110', '10000', '10000', '11111'],
  G: ['01110', '10001', '10000', '10111', '10001', '10001', '01110'],
  H: ['10001', '10001', '10001', '11111', '10001', '10001', '10001'],
  I: ['01110', '00100', '00100', '00100', '00100', '00100', '01110'],
  M: ['10001', '11011', '10101', '10101', '10001', '10001', '10001'],
  N: ['10001', '11001', '10101', '10011', '10001', '10001', '10001'],
  O: ['01110', '10001', '10001', '10001', '10001', '10001', '01110'],
  Q: ['01110', '10001', '10001', '10001', '10101', '10010', '01101'],
  R: ['11110', '10001', '10001', '11110', '10100', '10010', '10001'],
  S: ['01111', '10000', '10000', '01110', '00001', '00001', '11110'],
  T: ['11111', '00100', '00100', '00100', '00100', '00100', '00100'],
  U: ['10001', '10001', '10001', '10001', '10001', '10001', '01110'],
  Y: ['10001', '10001', '01010', '00100', '00100', '00100', '00100'],
  '(': ['00010', '00100', '01000', '01000', '01000', '00100', '00010'],
  ')': ['01000', '00100', '00010', '00010', '00010', '00100', '01000'],
  ' ': ['00000', '00000', '00000', '00000', '00000', '00000', '00000'],
}

export const GLYPH_WIDTH = 5
export const GLYPH_HEIGHT = 7

export interface Surface {
  width: number
  height: number
  /** RGBA bytes */
  data: Buffer
}

export function drawText(
  surface: Surface,
  text: string,
  x: number,
  y: number,
  scale = 2,
  rgb: [number, number, number] = [20, 20, 20],
): void {
  let cursor = x
  for (const char of text.toUpperCase()) {
    const glyph = GLYPHS[char] ?? GLYPHS[' ']
    for (let row = 0; row < GLYPH_HEIGHT; row++) {
      for (let col = 0; col < GLYPH_WIDTH; col++) {
        if (glyph[row][col] !== '1') continue
        for (let dy = 0; dy < scale; dy++) {
          for (let dx = 0; dx < scale; dx++) {
            const px = cursor + col * scale + dx
            const py = y + row * scale + dy
            if (px < 0 || py < 0 || px >= surface.width || py >= surface.height) continue
            const offset = (py * surface.width + px) * 4
            surface.data[offset] = rgb[0]
            surface.data[offset + 1] = rgb[1]
            surface.data[offset + 2] = rgb[2]
            surface.data[offset + 3] = 255
          }
        }
      }
    }
    cursor += (GLYPH_WIDTH + 1) * scale
  }
}

export function textWidth(text: string, scale = 2): number {
  return text.length * (GLYPH_WIDTH + 1) * scale
}
