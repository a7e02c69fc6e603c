/**
 * Registry manifest access. The manifest JSON is exported by the primary
 * toolkit (`genmetrics report --export-registry`) and is the single source
 * of truth for input resolutions, friendly filters, normalization constants,
 * and feature geometry.
 */

import * as fs from 'fs'

import { RegistryMismatchError } from './errors'

export type FilterName = 'nearest' | 'bilinear' | 'bicubic' | 'lanczos'

export interface BackboneEntry {
  name: string
  input_resolution: number
  friendly_filter: FilterName
  feature_dim: number
  class_count: number | null
  channel_scale: [number, number, number]
  channel_offset: [number, number, number]
  score_name: string
  fd_name: string
  prdc_prefix: string
}

export interface RegistryManifest {
  schema: string
  toolkit_version: string
  backbones: BackboneEntry[]
}

const SCHEMA_ID = 'genmetrics-registry-v1'

export function loadRegistry(path: string): RegistryManifest {
  let raw: string
  try {
    raw = fs.readFileSync(path, 'utf8')
  } catch (err) {
    throw new RegistryMismatchError(`cannot read registry manifest ${path}: ${err}`)
  }
  const manifest = JSON.parse(raw) as RegistryManifest
  if (manifest.schema !== SCHEMA_ID) {
    throw new RegistryMismatchError(
      `registry schema ${JSON.stringify(manifest.schema)} != ${SCHEMA_ID}`,
    )
  }
  if (!Array.isArray(manifest.backbones)) {
    throw new RegistryMismatchError('registry manifest has no backbones array')
  }
  return manifest
}

export function resolveBackbone(manifest: RegistryManifest, name: string): BackboneEntry {
  const entry = manifest.backbones.find((b) => b.name === name)
  if (!entry) {
    const known = manifest.backbones.map((b) => b.name).join(', ')
    throw new RegistryMismatchError(`backbone ${JSON.stringify(name)} not in registry (known: ${known})`)
  }
  return entry
}
