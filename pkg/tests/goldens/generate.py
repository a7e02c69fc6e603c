#!/usr/bin/env python3
"""Regenerate resample_goldens.npz from the reference resampler.

Run once and commit the output. The goldens come from Pillow's float-mode
resampling engine (per-channel 'F' images), which accumulates in float and
applies no intermediate quantization, then are quantized with the toolkit's
final-cast rule (round half up, clamp). The toolkit's own resizer is never
involved, so these files stay an independent reference.

Usage: python tests/goldens/generate.py
"""

from pathlib import Path

import numpy as np
from PIL import Image

FILTERS = {
    "bilinear": Image.BILINEAR,
    "bicubic": Image.BICUBIC,
    "lanczos": Image.LANCZOS,
}

# (w, h) source is 16x12; down to 7x5, up to 37x23 (non-integer ratios).
SRC_W, SRC_H = 16, 12
SIZES = {"down": (7, 5), "up": (37, 23)}


def checkerboard(w: int, h: int, cell: int = 2) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    board = ((xx // cell + yy // cell) % 2) * 255
    return np.stack([board, 255 - board, board], axis=-1).astype(np.uint8)


def gradient(w: int, h: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    r = xx * 255.0 / (w - 1)
    g = yy * 255.0 / (h - 1)
    b = (r + g) / 2.0
    return np.floor(np.stack([r, g, b], axis=-1) + 0.5).astype(np.uint8)


def reference_resize(img: np.ndarray, out_w: int, out_h: int, pil_filter) -> np.ndarray:
    chans = []
    for c in range(img.shape[2]):
        fim = Image.fromarray(img[:, :, c].astype(np.float32), mode="F")
        chans.append(np.asarray(fim.resize((out_w, out_h), pil_filter), dtype=np.float64))
    arr = np.stack(chans, axis=-1)
    return np.clip(np.floor(arr + 0.5), 0.0, 255.0).astype(np.uint8)


def main() -> None:
    patterns = {
        "checker": checkerboard(SRC_W, SRC_H),
        "gradient": gradient(SRC_W, SRC_H),
    }
    arrays = {f"src_{name}": img for name, img in patterns.items()}
    for pat_name, img in patterns.items():
        for filt_name, pil_filter in FILTERS.items():
            for dir_name, (ow, oh) in SIZES.items():
                key = f"{pat_name}_{filt_name}_{dir_name}"
                arrays[key] = reference_resize(img, ow, oh, pil_filter)
    # The classic spot check: full-contrast 8x8 checker halved with lanczos.
    small = checkerboard(8, 8, cell=1)
    arrays["src_checker8"] = small
    arrays["checker8_lanczos_half"] = reference_resize(small, 4, 4, Image.LANCZOS)
    out = Path(__file__).parent / "resample_goldens.npz"
    np.savez_compressed(out, **arrays)
    print(f"wrote {out} with {len(arrays)} arrays")


if __name__ == "__main__":
    main()
