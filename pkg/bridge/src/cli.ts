#!/usr/bin/env node
/**
 * bridge extract --backbone NAME --images DIR --out FILE
 *                --registry FILE --model-dir DIR [--lockfile FILE]
 *                [--batch-size N] [--device cpu]
 *
 * Exit codes: 0 success, 1 data error, 2 usage error.
 */

import * as path from 'path'

import { initDevice, loadBackboneRunner, loadLockfile } from './backbone'
import { BridgeError } from './errors'
import { extract } from './extract'
import { loadRegistry, resolveBackbone } from './registry'

interface Args {
  backbone: string
  images: string
  out: string
  registry: string
  modelDir: string
  lockfile: string
  batchSize: number
  device: string
}

function usage(message?: string): never {
  if (message) console.error(`usage error: ${message}`)
  console.error(
    'usage: bridge extract --backbone NAME --images DIR --out FILE ' +
      '--registry FILE --model-dir DIR [--lockfile FILE] [--batch-size N] [--device cpu]',
  )
  process.exit(2)
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== 'extract') usage(`unknown command ${JSON.stringify(argv[0])}`)
  const flags = new Map<string, string>()
  for (let i = 1; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || i + 1 >= argv.length) usage(`bad flag ${argv[i]}`)
    flags.set(argv[i].slice(2), argv[i + 1])
  }
  const need = (k: string): string => {
    const v = flags.get(k)
    if (!v) usage(`--${k} is required`)
    return v
  }
  const modelDir = need('model-dir')
  return {
    backbone: need('backbone'),
    images: need('images'),
    out: need('out'),
    registry: need('registry'),
    modelDir,
    lockfile: flags.get('lockfile') ?? path.join(modelDir, 'weights-lock.json'),
    batchSize: parseInt(flags.get('batch-size') ?? '16', 10),
    device: flags.get('device') ?? 'cpu',
  }
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2))
  const manifest = loadRegistry(args.registry)
  const backbone = resolveBackbone(manifest, args.backbone)
  await initDevice(args.device)
  const lock = loadLockfile(args.lockfile)
  const runner = await loadBackboneRunner(backbone, args.modelDir, lock)
  try {
    const result = await extract(
      {
        imageDir: args.images,
        backbone,
        batchSize: args.batchSize,
        device: args.device,
        output: args.out,
      },
      runner,
    )
    console.log(
      `wrote ${args.out}: N=${result.count} D=${result.dim} K=${result.classes} ` +
        `(order hash ${result.orderHash.slice(0, 12)}...)`,
    )
  } finally {
    runner.dispose()
  }
}

main().catch((err) => {
  if (err instanceof BridgeError) {
    console.error(`error: ${err.message}`)
    process.exit(1)
  }
  console.error(err)
  process.exit(1)
})
