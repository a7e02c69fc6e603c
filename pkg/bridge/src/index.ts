export { BridgeError, DeviceFailureError, RegistryMismatchError, WeightsUnavailableError } from './errors'
export { loadRegistry, resolveBackbone } from './registry'
export type { BackboneEntry, FilterName, RegistryManifest } from './registry'
export { backbonePrepare, filterWindows, kernelValue, resizeU8 } from './resample'
export type { RasterU8 } from './resample'
export { decodePng } from './png'
export { decodeGmf1, encodeGmf1 } from './gmf1'
export type { FeaturePayload } from './gmf1'
export {
  diskIOHandler,
  initDevice,
  loadBackboneRunner,
  loadLockfile,
  verifyWeights,
  wrapModel,
} from './backbone'
export type { BackboneRunner, BatchResult, WeightsLockfile } from './backbone'
export { extract, listImages, orderHash } from './extract'
export type { BridgeJob, ExtractResult } from './extract'
