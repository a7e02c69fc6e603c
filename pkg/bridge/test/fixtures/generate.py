#!/usr/bin/env python3
"""Regenerate the bridge's cross-language fixtures from the primary toolkit.

Produces:
  registry.json            exported registry manifest (with the "toy" test
                           backbone added through a config file)
  probes/probe_NN.png      16 structured probe images (mixed sizes, 2 gray)
  expected/index.json      shapes for the expected rasters
  expected/<backbone>__probe_NN.bin.z
                           zlib-compressed route-4 uint8 rasters computed by
                           the primary resizer (pre-normalization)

Run from this directory: python3 generate.py
"""

import json
import subprocess
import sys
import zlib
from pathlib import Path

import numpy as np

from genmetrics import FilterKind, PixelBuffer, Storage, encode_png, resize
from genmetrics.featurestore import builtin_registry

HERE = Path(__file__).parent

TOY_BACKBONE = {
    "name": "toy",
    "input_resolution": 16,
    "friendly_filter": "bicubic",
    "feature_dim": 8,
    "class_count": 5,
    "channel_scale": [1.0 / 127.5] * 3,
    "channel_offset": [-1.0] * 3,
    "score_name": "toyS",
    "fd_name": "FtoyD",
    "prdc_prefix": "toy-",
}


def probe_images() -> list[np.ndarray]:
    """16 deterministic structured rasters; indices 14, 15 are grayscale."""
    images = []
    rng = np.random.default_rng(20240)
    sizes = [(24, 24), (32, 48), (48, 32), (64, 64), (80, 56), (56, 80),
             (37, 61), (61, 37), (29, 29), (72, 24), (24, 72), (45, 45),
             (33, 51), (51, 33), (40, 40), (66, 42)]
    for idx, (h, w) in enumerate(sizes):
        yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
        kind = idx % 7
        if kind == 0:
            base = ((xx // 4 + yy // 4) % 2) * 255
        elif kind == 1:
            base = (xx * 255 / max(w - 1, 1))
        elif kind == 2:
            base = (np.sin(xx / 3.0) * 0.5 + 0.5) * 255
        elif kind == 3:
            cy, cx = h / 2, w / 2
            base = (np.hypot(yy - cy, xx - cx) < min(h, w) / 3) * 255
        elif kind == 4:
            base = ((yy // 3) % 2) * 200 + 25
        elif kind == 5:
            base = (xx + yy) * 255 / max(h + w - 2, 1)
        else:
            base = (np.cos(yy / 5.0) * np.sin(xx / 7.0) * 0.5 + 0.5) * 255
        base = np.floor(base + 0.5).astype(np.uint8)
        if idx >= 14:
            images.append(base[:, :, np.newaxis])
        else:
            shift = rng.integers(0, 60, 2)
            rgb = np.stack(
                [base,
                 np.roll(base, int(shift[0]), axis=1),
                 np.roll(base, int(shift[1]), axis=0)],
                axis=-1,
            )
            images.append(rgb)
    return images


def main() -> None:
    probes_dir = HERE / "probes"
    expected_dir = HERE / "expected"
    probes_dir.mkdir(exist_ok=True)
    expected_dir.mkdir(exist_ok=True)

    config = HERE / "toy-config.json"
    config.write_text(json.dumps({"custom_backbones": [TOY_BACKBONE]}, indent=1) + "\n")
    subprocess.run(
        [sys.executable, "-m", "genmetrics.cli", "report", "--export-registry",
         "--config", str(config), "--out", str(HERE / "registry.json")],
        check=True,
    )

    index = {}
    for idx, arr in enumerate(probe_images()):
        buf = PixelBuffer(arr, Storage.U8)
        (probes_dir / f"probe_{idx:02d}.png").write_bytes(encode_png(buf))
        for spec in builtin_registry():
            res = spec.input_resolution
            out = resize(buf, res, res, spec.friendly_filter, antialias=True)
            key = f"{spec.name}__probe_{idx:02d}"
            (expected_dir / f"{key}.bin.z").write_bytes(
                zlib.compress(out.pixels.tobytes(), 9)
            )
            index[key] = {
                "height": out.height,
                "width": out.width,
                "channels": out.channels,
            }
    (expected_dir / "index.json").write_text(json.dumps(index, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(index)} expected rasters for 16 probes")


if __name__ == "__main__":
    main()
