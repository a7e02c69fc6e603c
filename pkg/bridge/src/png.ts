/** PNG decoding for prepared image directories (8-bit gray or RGB). */

import { PNG } from 'pngjs'

import { RasterU8 } from './resample'

/** IHDR color type sits right after width/height/bit-depth. */
function colorType(blob: Buffer): number {
  if (blob.length < 26) throw new RangeError('truncated PNG')
  return blob.readUInt8(25)
}

export function decodePng(blob: Buffer): RasterU8 {
  const kind = colorType(blob)
  if (kind !== 0 && kind !== 2) {
    throw new RangeError(
      `unsupported PNG color type ${kind}; prepared images are 8-bit gray or RGB`,
    )
  }
  const png = PNG.sync.read(blob)
  const { width, height } = png
  const rgba = png.data // pngjs expands every layout to RGBA
  const channels = kind === 0 ? 1 : 3
  const pixels = new Uint8Array(width * height * channels)
  for (let p = 0; p < width * height; p++) {
    if (channels === 1) {
      pixels[p] = rgba[p * 4]
    } else {
      pixels[p * 3] = rgba[p * 4]
      pixels[p * 3 + 1] = rgba[p * 4 + 1]
      pixels[p * 3 + 2] = rgba[p * 4 + 2]
    }
  }
  return { width, height, channels, pixels }
}
