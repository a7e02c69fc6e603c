/**
 * The extract job: prepared PNGs in, one GMF1 feature file out.
 *
 * Images are processed in lexicographic filename order; row i of the output
 * corresponds to the i-th file. A sidecar `<out>.meta.json` records the file
 * list, an order hash (sha256 of the newline-joined names), batch size, and
 * backbone name, so consumers can audit ordering. The GMF1 file is written
 * to a temp path and renamed into place on success.
 */

import * as crypto from 'crypto'
import * as fs from 'fs'
import * as path from 'path'

import { BackboneRunner } from './backbone'
import { encodeGmf1 } from './gmf1'
import { decodePng } from './png'
import { BackboneEntry } from './registry'
import { backbonePrepare } from './resample'
import { RegistryMismatchError } from './errors'

export interface BridgeJob {
  imageDir: string
  backbone: BackboneEntry
  batchSize: number
  device: string
  output: string
}

export interface ExtractResult {
  count: number
  dim: number
  classes: number
  files: string[]
  orderHash: string
}

export function listImages(dir: string): string[] {
  const names = fs
    .readdirSync(dir)
    .filter((n) => n.toLowerCase().endsWith('.png'))
    .sort() // lexicographic: the order contract
  if (names.length === 0) {
    throw new RegistryMismatchError(`no PNG files in ${dir}`)
  }
  return names
}

export function orderHash(names: string[]): string {
  return crypto.createHash('sha256').update(names.join('\n'), 'utf8').digest('hex')
}

export async function extract(job: BridgeJob, runner: BackboneRunner): Promise<ExtractResult> {
  const { backbone } = job
  if (runner.featureDim !== backbone.feature_dim) {
    throw new RegistryMismatchError(
      `runner feature dim ${runner.featureDim} != registry ${backbone.feature_dim}`,
    )
  }
  const names = listImages(job.imageDir)
  const n = names.length
  const res = backbone.input_resolution
  const dim = backbone.feature_dim
  const classes = runner.classCount ?? 0
  const features = new Float32Array(n * dim)
  const posteriors = classes > 0 ? new Float32Array(n * classes) : undefined

  const batch = Math.max(1, job.batchSize)
  for (let start = 0; start < n; start += batch) {
    const stop = Math.min(start + batch, n)
    const size = stop - start
    const input = new Float32Array(size * res * res * 3)
    for (let i = 0; i < size; i++) {
      const blob = fs.readFileSync(path.join(job.imageDir, names[start + i]))
      const prepared = backbonePrepare(decodePng(blob), backbone)
      input.set(prepared.input, i * res * res * 3)
    }
    const out = await runner.run(input, size, res)
    features.set(out.features, start * dim)
    if (posteriors) {
      if (!out.posteriors) {
        throw new RegistryMismatchError(
          `registry declares ${classes} classes but the model emits no posteriors`,
        )
      }
      posteriors.set(out.posteriors, start * classes)
    }
  }

  const blob = encodeGmf1({
    count: n,
    dim,
    features,
    posteriors,
    classes: posteriors ? classes : 0,
  })
  const tmp = job.output + '.tmp'
  fs.mkdirSync(path.dirname(path.resolve(job.output)), { recursive: true })
  fs.writeFileSync(tmp, blob)
  fs.renameSync(tmp, job.output)

  const hash = orderHash(names)
  const meta = {
    backbone: backbone.name,
    batch_size: batch,
    count: n,
    feature_dim: dim,
    class_count: posteriors ? classes : 0,
    files: names,
    order_hash: hash,
    bridge_version: '0.1.0',
  }
  fs.writeFileSync(job.output + '.meta.json', JSON.stringify(meta, null, 1) + '\n')
  return { count: n, dim, classes: posteriors ? classes : 0, files: names, orderHash: hash }
}
