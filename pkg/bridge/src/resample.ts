/**
 * Separable anti-aliasing resampler and per-backbone input preparation.
 *
 * This mirrors the primary toolkit's resizer semantics so that route-4
 * pixels match it within one 8-bit level (the cross-language parity test
 * pins this): per-output-pixel kernel windows with support stretched by the
 * inverse scale on downscale, window clipped to the valid range and weights
 * renormalized, horizontal pass then vertical, float64 accumulation, uint8
 * output rounded half-up. A pass whose size is unchanged is skipped.
 */

import { BackboneEntry, FilterName } from './registry'

export interface RasterU8 {
  width: number
  height: number
  channels: number
  /** Row-major, channel-interleaved. */
  pixels: Uint8Array
}

export interface RasterF64 {
  width: number
  height: number
  channels: number
  pixels: Float64Array
}

const SUPPORT: Record<FilterName, number> = {
  nearest: 0.5,
  bilinear: 1.0,
  bicubic: 2.0,
  lanczos: 3.0,
}

const BICUBIC_A = -0.5
const LANCZOS_A = 3

export function kernelValue(filter: FilterName, t: number): number {
  t = Math.abs(t)
  switch (filter) {
    case 'nearest':
      return t <= 0.5 ? 1.0 : 0.0
    case 'bilinear':
      return t < 1.0 ? 1.0 - t : 0.0
    case 'bicubic': {
      const a = BICUBIC_A
      if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
      if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a
      return 0.0
    }
    case 'lanczos': {
      if (t === 0.0) return 1.0
      if (t >= LANCZOS_A) return 0.0
      const pt = Math.PI * t
      return (LANCZOS_A * Math.sin(pt) * Math.sin(pt / LANCZOS_A)) / (pt * pt)
    }
  }
}

interface AxisWindow {
  lo: number
  weights: Float64Array
}

export function filterWindows(
  filter: FilterName,
  inSize: number,
  outSize: number,
  antialias: boolean,
): AxisWindow[] {
  const scale = inSize / outSize
  const stretch = antialias && filter !== 'nearest' ? Math.max(scale, 1.0) : 1.0
  const support = SUPPORT[filter] * stretch
  const windows: AxisWindow[] = []
  for (let i = 0; i < outSize; i++) {
    const center = (i + 0.5) * scale
    const lo = Math.max(Math.trunc(center - support + 0.5), 0)
    const hi = Math.min(Math.trunc(center + support + 0.5), inSize)
    const weights = new Float64Array(Math.max(hi - lo, 0))
    let total = 0
    for (let x = lo; x < hi; x++) {
      const w = kernelValue(filter, (x - center + 0.5) / stretch)
      weights[x - lo] = w
      total += w
    }
    if (total !== 0) {
      for (let j = 0; j < weights.length; j++) weights[j] /= total
    }
    windows.push({ lo, weights })
  }
  return windows
}

function horizontalPass(src: RasterF64, windows: AxisWindow[], outW: number): RasterF64 {
  const { width, height, channels } = src
  const out = new Float64Array(outW * height * channels)
  for (let y = 0; y < height; y++) {
    const rowBase = y * width * channels
    for (let ox = 0; ox < outW; ox++) {
      const { lo, weights } = windows[ox]
      for (let c = 0; c < channels; c++) {
        let acc = 0
        for (let j = 0; j < weights.length; j++) {
          acc += weights[j] * src.pixels[rowBase + (lo + j) * channels + c]
        }
        out[(y * outW + ox) * channels + c] = acc
      }
    }
  }
  return { width: outW, height, channels, pixels: out }
}

function verticalPass(src: RasterF64, windows: AxisWindow[], outH: number): RasterF64 {
  const { width, height, channels } = src
  const out = new Float64Array(width * outH * channels)
  for (let oy = 0; oy < outH; oy++) {
    const { lo, weights } = windows[oy]
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < channels; c++) {
        let acc = 0
        for (let j = 0; j < weights.length; j++) {
          acc += weights[j] * src.pixels[((lo + j) * width + x) * channels + c]
        }
        out[(oy * width + x) * channels + c] = acc
      }
    }
  }
  return { width, height: outH, channels, pixels: out }
}

export function resizeU8(
  src: RasterU8,
  outW: number,
  outH: number,
  filter: FilterName,
  antialias = true,
): RasterU8 {
  if (outW < 1 || outH < 1) {
    throw new RangeError(`target size must be at least 1x1, got ${outW}x${outH}`)
  }
  let work: RasterF64 = {
    width: src.width,
    height: src.height,
    channels: src.channels,
    pixels: Float64Array.from(src.pixels),
  }
  if (outW !== src.width) {
    work = horizontalPass(work, filterWindows(filter, src.width, outW, antialias), outW)
  }
  if (outH !== src.height) {
    work = verticalPass(work, filterWindows(filter, src.height, outH, antialias), outH)
  }
  const bytes = new Uint8Array(work.pixels.length)
  for (let i = 0; i < bytes.length; i++) {
    const v = Math.floor(work.pixels[i] + 0.5)
    bytes[i] = v < 0 ? 0 : v > 255 ? 255 : v
  }
  return { width: outW, height: outH, channels: src.channels, pixels: bytes }
}

/**
 * Route-4 preparation: friendly resize (antialias on), grayscale replicated
 * to three channels, then the backbone's affine channel normalization.
 * Returns float32 ready to feed the network plus the pre-normalization
 * uint8 raster (what the parity test compares).
 */
export function backbonePrepare(
  src: RasterU8,
  backbone: BackboneEntry,
): { input: Float32Array; resized: RasterU8 } {
  const res = backbone.input_resolution
  const resized = resizeU8(src, res, res, backbone.friendly_filter, true)
  const input = new Float32Array(res * res * 3)
  const scale = backbone.channel_scale
  const offset = backbone.channel_offset
  const ch = resized.channels
  for (let p = 0; p < res * res; p++) {
    for (let c = 0; c < 3; c++) {
      const value = resized.pixels[p * ch + (ch === 1 ? 0 : c)]
      input[p * 3 + c] = value * scale[c] + offset[c]
    }
  }
  return { input, resized }
}
