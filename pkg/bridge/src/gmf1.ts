/**
 * GMF1 writer/reader (little-endian, bit-exact):
 *
 *   64-byte header: "GMF1" | u32 version=1 | u64 N | u32 D | u32 K |
 *                   u32 flags (bit0 = labels) | zero padding
 *   payload: N x D f32 features, N u32 labels (if bit0), N x K f32 posteriors
 */

const MAGIC = 'GMF1'
const VERSION = 1
const HEADER_SIZE = 64
const FLAG_LABELS = 1

export interface FeaturePayload {
  count: number
  dim: number
  /** Row-major float32 features, length count*dim. */
  features: Float32Array
  labels?: Uint32Array
  /** Row-major float32 posteriors, length count*classes. */
  posteriors?: Float32Array
  classes?: number
}

export function encodeGmf1(payload: FeaturePayload): Buffer {
  const { count, dim, features, labels, posteriors } = payload
  if (features.length !== count * dim) {
    throw new RangeError(`features length ${features.length} != ${count}x${dim}`)
  }
  const classes = posteriors ? payload.classes ?? 0 : 0
  if (posteriors && posteriors.length !== count * classes) {
    throw new RangeError(`posteriors length ${posteriors.length} != ${count}x${classes}`)
  }
  if (labels && labels.length !== count) {
    throw new RangeError(`labels length ${labels.length} != ${count}`)
  }
  for (const arr of [features, posteriors]) {
    if (arr) {
      for (const v of arr) {
        if (!Number.isFinite(v)) throw new RangeError('non-finite value in payload')
      }
    }
  }
  const header = Buffer.alloc(HEADER_SIZE)
  header.write(MAGIC, 0, 'ascii')
  header.writeUInt32LE(VERSION, 4)
  header.writeBigUInt64LE(BigInt(count), 8)
  header.writeUInt32LE(dim, 16)
  header.writeUInt32LE(classes, 20)
  header.writeUInt32LE(labels ? FLAG_LABELS : 0, 24)
  const parts = [header, toLittleEndianBuffer(features)]
  if (labels) parts.push(toLittleEndianBuffer(labels))
  if (posteriors) parts.push(toLittleEndianBuffer(posteriors))
  return Buffer.concat(parts)
}

export function decodeGmf1(blob: Buffer): FeaturePayload {
  if (blob.length < HEADER_SIZE) {
    throw new RangeError(`file is ${blob.length} bytes, header needs ${HEADER_SIZE}`)
  }
  if (blob.toString('ascii', 0, 4) !== MAGIC) {
    throw new RangeError(`bad magic ${JSON.stringify(blob.toString('ascii', 0, 4))}`)
  }
  const version = blob.readUInt32LE(4)
  if (version !== VERSION) {
    throw new RangeError(`format version ${version}, expected ${VERSION}`)
  }
  const count = Number(blob.readBigUInt64LE(8))
  const dim = blob.readUInt32LE(16)
  const classes = blob.readUInt32LE(20)
  const hasLabels = (blob.readUInt32LE(24) & FLAG_LABELS) !== 0
  const expected =
    HEADER_SIZE + count * dim * 4 + (hasLabels ? count * 4 : 0) + count * classes * 4
  if (blob.length < expected) {
    throw new RangeError(`file is ${blob.length} bytes, header promises ${expected}`)
  }
  let off = HEADER_SIZE
  const features = readF32(blob, off, count * dim)
  off += count * dim * 4
  let labels: Uint32Array | undefined
  if (hasLabels) {
    labels = new Uint32Array(count)
    for (let i = 0; i < count; i++) labels[i] = blob.readUInt32LE(off + i * 4)
    off += count * 4
  }
  let posteriors: Float32Array | undefined
  if (classes > 0) {
    posteriors = readF32(blob, off, count * classes)
  }
  return { count, dim, features, labels, posteriors, classes }
}

function readF32(blob: Buffer, offset: number, length: number): Float32Array {
  const out = new Float32Array(length)
  for (let i = 0; i < length; i++) out[i] = blob.readFloatLE(offset + i * 4)
  return out
}

function toLittleEndianBuffer(arr: Float32Array | Uint32Array): Buffer {
  // Serialize explicitly little-endian regardless of host byte order.
  const bytes = Buffer.alloc(arr.length * 4)
  if (arr instanceof Float32Array) {
    for (let i = 0; i < arr.length; i++) bytes.writeFloatLE(arr[i], i * 4)
  } else {
    for (let i = 0; i < arr.length; i++) bytes.writeUInt32LE(arr[i], i * 4)
  }
  return bytes
}
