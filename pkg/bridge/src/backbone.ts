/**
 * Backbone model loading and batched inference.
 *
 * Models are tfjs LayersModel directories (model.json + weight shards) read
 * from local disk through a custom IO handler; pure @tensorflow/tfjs with
 * the CPU backend keeps inference deterministic. Weight provenance is
 * pinned in a lockfile mapping each backbone to its source URL and the
 * sha256 of every file; anything missing or failing its checksum raises
 * WeightsUnavailableError. The bridge never downloads weights itself.
 */

import * as crypto from 'crypto'
import * as fs from 'fs'
import * as path from 'path'

import * as tf from '@tensorflow/tfjs'

import { DeviceFailureError, WeightsUnavailableError } from './errors'
import { BackboneEntry } from './registry'

export interface WeightsLockEntry {
  url: string
  files: Record<string, string> // file name -> sha256 hex
}

export type WeightsLockfile = Record<string, WeightsLockEntry>

export interface BatchResult {
  /** Row-major [batch, featureDim] pooled features. */
  features: Float32Array
  /** Row-major [batch, classCount] softmax posteriors, when a head exists. */
  posteriors?: Float32Array
}

export interface BackboneRunner {
  featureDim: number
  classCount: number | null
  run(batch: Float32Array, batchSize: number, resolution: number): Promise<BatchResult>
  dispose(): void
}

export async function initDevice(device: string): Promise<void> {
  if (device !== 'cpu') {
    throw new DeviceFailureError(`unsupported device ${JSON.stringify(device)}; only "cpu"`)
  }
  try {
    await tf.setBackend('cpu')
    await tf.ready()
  } catch (err) {
    throw new DeviceFailureError(`cannot initialize tfjs cpu backend: ${err}`)
  }
}

export function loadLockfile(lockPath: string): WeightsLockfile {
  try {
    return JSON.parse(fs.readFileSync(lockPath, 'utf8')) as WeightsLockfile
  } catch (err) {
    throw new WeightsUnavailableError(`cannot read weights lockfile ${lockPath}: ${err}`)
  }
}

function sha256(buf: Buffer): string {
  return crypto.createHash('sha256').update(buf).digest('hex')
}

export function verifyWeights(
  backboneName: string,
  modelDir: string,
  lock: WeightsLockfile,
): void {
  const entry = lock[backboneName]
  if (!entry) {
    throw new WeightsUnavailableError(
      `no lockfile entry for backbone ${JSON.stringify(backboneName)}`,
    )
  }
  for (const [file, expected] of Object.entries(entry.files)) {
    const full = path.join(modelDir, file)
    if (!fs.existsSync(full)) {
      throw new WeightsUnavailableError(
        `weights file ${file} missing from ${modelDir}; pinned source: ${entry.url}`,
      )
    }
    const actual = sha256(fs.readFileSync(full))
    if (actual !== expected) {
      throw new WeightsUnavailableError(
        `checksum mismatch for ${file}: expected ${expected}, got ${actual}`,
      )
    }
  }
}

interface StoredModelJson {
  modelTopology: unknown
  format?: string
  generatedBy?: string
  convertedBy?: string
  weightsManifest: Array<{ paths: string[]; weights: tf.io.WeightsManifestEntry[] }>
}

/** IO handler reading/writing a tfjs LayersModel directory on local disk. */
export function diskIOHandler(dir: string): tf.io.IOHandler {
  return {
    load: async (): Promise<tf.io.ModelArtifacts> => {
      const modelJson = JSON.parse(
        fs.readFileSync(path.join(dir, 'model.json'), 'utf8'),
      ) as StoredModelJson
      const specs: tf.io.WeightsManifestEntry[] = []
      const shards: Buffer[] = []
      for (const group of modelJson.weightsManifest) {
        for (const p of group.paths) shards.push(fs.readFileSync(path.join(dir, p)))
        specs.push(...group.weights)
      }
      const weightData = Buffer.concat(shards)
      return {
        modelTopology: modelJson.modelTopology as object,
        format: modelJson.format,
        generatedBy: modelJson.generatedBy,
        convertedBy: modelJson.convertedBy,
        weightSpecs: specs,
        weightData: weightData.buffer.slice(
          weightData.byteOffset,
          weightData.byteOffset + weightData.byteLength,
        ),
      }
    },
    save: async (artifacts: tf.io.ModelArtifacts): Promise<tf.io.SaveResult> => {
      fs.mkdirSync(dir, { recursive: true })
      const weightData = artifacts.weightData as ArrayBuffer
      fs.writeFileSync(path.join(dir, 'weights.bin'), Buffer.from(weightData))
      const modelJson: StoredModelJson = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: artifacts.convertedBy ?? undefined,
        weightsManifest: [
          { paths: ['weights.bin'], weights: artifacts.weightSpecs ?? [] },
        ],
      }
      fs.writeFileSync(path.join(dir, 'model.json'), JSON.stringify(modelJson))
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON',
        },
      }
    },
  }
}

/**
 * Load a verified model and wrap it as a runner.
 *
 * Model contract: input [B, res, res, 3]; output either a single [B, D]
 * feature tensor or [features, logits]. Logits are softmaxed into
 * posteriors.
 */
export async function loadBackboneRunner(
  backbone: BackboneEntry,
  modelDir: string,
  lock: WeightsLockfile,
): Promise<BackboneRunner> {
  verifyWeights(backbone.name, modelDir, lock)
  let model: tf.LayersModel
  try {
    model = await tf.loadLayersModel(diskIOHandler(modelDir))
  } catch (err) {
    throw new WeightsUnavailableError(`cannot load model from ${modelDir}: ${err}`)
  }
  return wrapModel(model, backbone)
}

export function wrapModel(model: tf.LayersModel, backbone: BackboneEntry): BackboneRunner {
  return {
    featureDim: backbone.feature_dim,
    classCount: backbone.class_count,
    async run(batch, batchSize, resolution) {
      const out = tf.tidy(() => {
        const input = tf.tensor4d(batch, [batchSize, resolution, resolution, 3])
        const result = model.predict(input)
        const tensors = Array.isArray(result) ? result : [result]
        const features = tensors[0] as tf.Tensor2D
        const posteriors =
          tensors.length > 1 ? tf.softmax(tensors[1] as tf.Tensor2D) : undefined
        return { features, posteriors }
      })
      const features = new Float32Array(await out.features.data())
      const posteriors = out.posteriors
        ? new Float32Array(await out.posteriors.data())
        : undefined
      out.features.dispose()
      out.posteriors?.dispose()
      if (features.length !== batchSize * backbone.feature_dim) {
        throw new WeightsUnavailableError(
          `model emits ${features.length / batchSize} features per sample, ` +
            `registry says ${backbone.feature_dim}`,
        )
      }
      return { features, posteriors }
    },
    dispose() {
      model.dispose()
    },
  }
}
