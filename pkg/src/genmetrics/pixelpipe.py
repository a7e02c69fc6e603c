"""Image preparation pipeline: decode, resample, normalize, quantize, and
per-backbone input preparation.

The resampler is a separable convolution resizer with the high-quality
anti-aliasing semantics: on downscale the kernel support is stretched by the
inverse scale factor and the weights are renormalized per output pixel, so
every source pixel contributes and no aliasing survives. All resampling math
runs in float64 regardless of the buffer storage; the result is cast back to
the input storage at the end.

Buffers are immutable after construction and all operations are pure, so the
whole module is safe to drive from concurrent workers.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from .errors import (
    MalformedImageError,
    UnknownBackboneError,
    UnsupportedPixelLayoutError,
    WrongStorageError,
    ZeroDimensionError,
)

if TYPE_CHECKING:
    from .featurestore import BackboneSpec


class Storage(enum.Enum):
    """Pixel value representation of a buffer."""

    U8 = "u8"                         # uint8, values 0..255
    UNIT_FLOAT = "unit_float"         # float64, values in [-1, 1]
    BACKBONE_FLOAT = "backbone_float" # float64, per-backbone normalized


class FilterKind(enum.Enum):
    """Interpolation kernel used by the resampler."""

    NEAREST = "nearest"
    BILINEAR = "bilinear"
    BICUBIC = "bicubic"
    LANCZOS = "lanczos"

    @property
    def support(self) -> float:
        """Kernel support radius at unit scale."""
        return _SUPPORT[self]


_SUPPORT = {
    FilterKind.NEAREST: 0.5,
    FilterKind.BILINEAR: 1.0,
    FilterKind.BICUBIC: 2.0,
    FilterKind.LANCZOS: 3.0,
}

# Keys cubic-convolution parameter. Fixed, documented constant; matches the
# reference imaging library.
BICUBIC_A = -0.5

# Lanczos window width (number of sinc lobes).
LANCZOS_A = 3


@dataclass(frozen=True)
class PixelBuffer:
    """An immutable H x W x C raster with a declared storage representation.

    `pixels` is row-major and channel-interleaved. U8 buffers hold uint8,
    float storages hold float64. The storage tag is validated against the
    actual dtype and value range on construction.
    """

    pixels: np.ndarray
    storage: Storage

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise ValueError(f"expected a 2-D or 3-D raster, got ndim={arr.ndim}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ZeroDimensionError(f"raster must be at least 1x1, got {w}x{h}")
        if c not in (1, 3):
            raise UnsupportedPixelLayoutError(f"channels must be 1 or 3, got {c}")
        if self.storage is Storage.U8:
            if arr.dtype != np.uint8:
                raise WrongStorageError(f"U8 storage requires uint8 pixels, got {arr.dtype}")
            arr = np.array(arr, dtype=np.uint8, order="C")
        else:
            if not np.issubdtype(arr.dtype, np.floating):
                raise WrongStorageError(
                    f"{self.storage.value} storage requires float pixels, got {arr.dtype}"
                )
            arr = np.array(arr, dtype=np.float64, order="C")
            if not np.isfinite(arr).all():
                raise WrongStorageError("float pixels must be finite")
            if self.storage is Storage.UNIT_FLOAT:
                lo, hi = float(arr.min()), float(arr.max())
                if lo < -1.0 or hi > 1.0:
                    raise WrongStorageError(
                        f"unit-float pixels must lie in [-1, 1], got [{lo}, {hi}]"
                    )
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


def kernel_value(filter: FilterKind, t: float) -> float:
    """Evaluate the (unnormalized) 1-D kernel of `filter` at offset `t`.

    Kernels are symmetric: k(t) == k(-t). NEAREST is the box kernel of
    half-width 0.5.
    """
    t = abs(t)
    if filter is FilterKind.NEAREST:
        # Closed at the boundary: the single tap of an integer-factor resize
        # sits exactly at |t| = 0.5.
        return 1.0 if t <= 0.5 else 0.0
    if filter is FilterKind.BILINEAR:
        return 1.0 - t if t < 1.0 else 0.0
    if filter is FilterKind.BICUBIC:
        a = BICUBIC_A
        if t < 1.0:
            return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
        if t < 2.0:
            return (((t - 5.0) * t + 8.0) * t - 4.0) * a
        return 0.0
    if filter is FilterKind.LANCZOS:
        if t == 0.0:
            return 1.0
        if t >= LANCZOS_A:
            return 0.0
        pt = math.pi * t
        return LANCZOS_A * math.sin(pt) * math.sin(pt / LANCZOS_A) / (pt * pt)
    raise ValueError(f"unknown filter {filter!r}")


@lru_cache(maxsize=256)
def filter_coefficients(
    filter: FilterKind, in_size: int, out_size: int, antialias: bool
) -> np.ndarray:
    """Per-axis resampling weights as an (out_size, in_size) matrix.

    Output pixel centers sit at (i + 0.5) * in_size / out_size in source
    coordinates. With antialiasing on and a scale factor below 1 the kernel
    support is stretched by 1/scale; the window is clipped to the valid
    sample range and the weights renormalized, so every row sums to 1.
    NEAREST ignores the antialias flag (point sampling has nothing to widen).
    """
    scale = in_size / out_size  # source pixels per output pixel
    stretch = max(scale, 1.0) if (antialias and filter is not FilterKind.NEAREST) else 1.0
    support = filter.support * stretch
    weights = np.zeros((out_size, in_size), dtype=np.float64)
    for i in range(out_size):
        center = (i + 0.5) * scale
        lo = max(int(center - support + 0.5), 0)
        hi = min(int(center + support + 0.5), in_size)
        row = np.array(
            [kernel_value(filter, (x - center + 0.5) / stretch) for x in range(lo, hi)]
        )
        total = row.sum()
        if total != 0.0:
            row /= total
        weights[i, lo:hi] = row
    weights.setflags(write=False)
    return weights


def resize(
    src: PixelBuffer,
    out_w: int,
    out_h: int,
    filter: FilterKind,
    antialias: bool = True,
) -> PixelBuffer:
    """Separable resample of `src` to out_w x out_h, keeping its storage.

    Horizontal pass runs first, then vertical; a pass whose size is unchanged
    is skipped, so an identity resize returns the input pixels bit-exactly.
    Accumulation is float64; U8 output is rounded half-up and clamped, unit
    floats are clamped to [-1, 1].
    """
    if out_w < 1 or out_h < 1:
        raise ZeroDimensionError(f"target size must be at least 1x1, got {out_w}x{out_h}")
    arr = src.pixels.astype(np.float64)
    if out_w != src.width:
        coef = filter_coefficients(filter, src.width, out_w, antialias)
        arr = np.einsum("ow,hwc->hoc", coef, arr)
    if out_h != src.height:
        coef = filter_coefficients(filter, src.height, out_h, antialias)
        arr = np.einsum("oh,hwc->owc", coef, arr)
    if src.storage is Storage.U8:
        out = np.clip(np.floor(arr + 0.5), 0.0, 255.0).astype(np.uint8)
    elif src.storage is Storage.UNIT_FLOAT:
        out = np.clip(arr, -1.0, 1.0)
    else:
        out = arr
    return PixelBuffer(out, src.storage)


def decode_image(encoded_bytes: bytes, format: str) -> PixelBuffer:
    """Decode PNG or JPEG bytes into a U8 buffer, exactly as stored.

    No color management, no EXIF rotation. Only 8-bit grayscale and RGB
    layouts are accepted; anything else (palette, 16-bit, CMYK, alpha)
    raises UnsupportedPixelLayoutError.
    """
    from PIL import Image, UnidentifiedImageError

    fmt = format.upper()
    if fmt not in ("PNG", "JPEG"):
        raise ValueError(f"format must be PNG or JPEG, got {format!r}")
    try:
        img = Image.open(io.BytesIO(encoded_bytes))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise MalformedImageError(f"cannot decode {fmt} stream: {exc}") from exc
    if img.format != fmt:
        raise MalformedImageError(f"expected {fmt}, stream decodes as {img.format}")
    if img.mode not in ("L", "RGB"):
        raise UnsupportedPixelLayoutError(f"unsupported pixel layout {img.mode!r}")
    return PixelBuffer(np.asarray(img, dtype=np.uint8), Storage.U8)


def encode_png(buf: PixelBuffer) -> bytes:
    """Serialize a U8 buffer as lossless 8-bit PNG (the only output format)."""
    from PIL import Image

    if buf.storage is not Storage.U8:
        raise WrongStorageError("PNG output requires U8 storage; quantize first")
    arr = buf.pixels[:, :, 0] if buf.channels == 1 else buf.pixels
    out = io.BytesIO()
    Image.fromarray(arr).save(out, format="PNG")
    return out.getvalue()


def normalize(src: PixelBuffer) -> PixelBuffer:
    """Map U8 values to unit floats: v -> (v - 127.5) / 127.5."""
    if src.storage is not Storage.U8:
        raise WrongStorageError(f"normalize expects U8 input, got {src.storage.value}")
    values = (src.pixels.astype(np.float64) - 127.5) / 127.5
    return PixelBuffer(values, Storage.UNIT_FLOAT)


def quantize(src: PixelBuffer) -> PixelBuffer:
    """Map unit floats back to uint8: x -> floor(clip(127.5 x + 128, 0, 255)).

    The +128 offset makes the floor a round-half-up, so the operation is the
    exact inverse of normalize on all 256 byte values. Bit-exact and
    deterministic.
    """
    if src.storage is not Storage.UNIT_FLOAT:
        raise WrongStorageError(f"quantize expects unit-float input, got {src.storage.value}")
    q = np.floor(np.clip(src.pixels * 127.5 + 128.0, 0.0, 255.0))
    return PixelBuffer(q.astype(np.uint8), Storage.U8)


def backbone_prepare(src: PixelBuffer, spec: "BackboneSpec | str") -> PixelBuffer:
    """Resize + normalize a quantized image for one evaluation backbone.

    Input must be U8 (i.e. it went through quantization); float input is the
    forbidden shortcut that skips quantization and biases evaluation, so it
    is rejected. The image is resampled to the backbone's input resolution
    with its friendly filter (antialias on), grayscale is replicated to three
    channels, and the backbone's affine channel normalization
    (value * scale[c] + offset[c]) is applied.
    """
    if src.storage is not Storage.U8:
        raise WrongStorageError(
            "backbone_prepare requires quantized U8 input; feeding float pixels "
            "straight to the backbone is not allowed"
        )
    if isinstance(spec, str):
        from .featurestore import lookup_backbone

        spec = lookup_backbone(spec)  # raises UnknownBackboneError
    if spec.friendly_filter is None:
        raise UnknownBackboneError(f"backbone {spec.name!r} declares no friendly filter")
    res = spec.input_resolution
    resized = resize(src, res, res, spec.friendly_filter, antialias=True)
    arr = resized.pixels.astype(np.float64)
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    scale = np.asarray(spec.channel_scale, dtype=np.float64).reshape(1, 1, 3)
    offset = np.asarray(spec.channel_offset, dtype=np.float64).reshape(1, 1, 3)
    return PixelBuffer(arr * scale + offset, Storage.BACKBONE_FLOAT)
