/** Shared helpers for bridge tests: a deterministic toy model + tiny PNGs. */

import * as crypto from 'crypto'
import * as fs from 'fs'
import * as os from 'os'
import * as path from 'path'

import * as tf from '@tensorflow/tfjs'
import { PNG } from 'pngjs'

import { diskIOHandler, WeightsLockfile } from '../src/backbone'

export const TOY_RES = 16
export const TOY_DIM = 8
export const TOY_CLASSES = 5

/** Dense kernel mapping pooled channels [3] -> features [8]. */
export function featureKernel(): number[][] {
  const k: number[][] = []
  for (let i = 0; i < 3; i++) {
    k.push(Array.from({ length: TOY_DIM }, (_, j) => (((i * TOY_DIM + j) % 7) - 3) / 10))
  }
  return k
}

/** Dense kernel mapping features [8] -> logits [5]. */
export function logitKernel(): number[][] {
  const k: number[][] = []
  for (let i = 0; i < TOY_DIM; i++) {
    k.push(Array.from({ length: TOY_CLASSES }, (_, j) => (((i + 2 * j) % 5) - 2) / 8))
  }
  return k
}

export function buildToyModel(): tf.LayersModel {
  const input = tf.input({ shape: [TOY_RES, TOY_RES, 3] })
  const pooled = tf.layers.globalAveragePooling2d({}).apply(input) as tf.SymbolicTensor
  const feat = tf.layers
    .dense({ units: TOY_DIM, useBias: false, name: 'feat' })
    .apply(pooled) as tf.SymbolicTensor
  const logits = tf.layers
    .dense({ units: TOY_CLASSES, useBias: false, name: 'logits' })
    .apply(feat) as tf.SymbolicTensor
  const model = tf.model({ inputs: input, outputs: [feat, logits] })
  model.getLayer('feat').setWeights([tf.tensor2d(featureKernel())])
  model.getLayer('logits').setWeights([tf.tensor2d(logitKernel())])
  return model
}

export async function saveToyModel(dir: string): Promise<WeightsLockfile> {
  const model = buildToyModel()
  await model.save(diskIOHandler(dir))
  model.dispose()
  const files: Record<string, string> = {}
  for (const name of ['model.json', 'weights.bin']) {
    files[name] = crypto
      .createHash('sha256')
      .update(fs.readFileSync(path.join(dir, name)))
      .digest('hex')
  }
  return { toy: { url: 'https://example.invalid/toy-model', files } }
}

export function tmpDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix))
}

/** Write a constant-color RGB PNG. */
export function writePng(file: string, width: number, height: number, rgb: [number, number, number]): void {
  const png = new PNG({ width, height })
  for (let p = 0; p < width * height; p++) {
    png.data[p * 4] = rgb[0]
    png.data[p * 4 + 1] = rgb[1]
    png.data[p * 4 + 2] = rgb[2]
    png.data[p * 4 + 3] = 255
  }
  fs.writeFileSync(file, PNG.sync.write(png, { colorType: 2 }))
}
