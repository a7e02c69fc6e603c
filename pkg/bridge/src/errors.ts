/** Error types raised by the bridge. */

export class BridgeError extends Error {
  constructor(message: string) {
    super(message)
    this.name = new.target.name
  }
}

/** Pretrained weights missing or failing their pinned checksum. */
export class WeightsUnavailableError extends BridgeError {}

/** Backbone name or geometry not matching the shared registry manifest. */
export class RegistryMismatchError extends BridgeError {}

/** Compute device could not be initialized. */
export class DeviceFailureError extends BridgeError {}
