"""Feature interchange: in-memory feature/posterior sets, Gaussian moment
summaries, the backbone registry, and the GMF1 binary file format.

GMF1 layout (all little-endian, bit-exact):

    64-byte header:
        magic   "GMF1"        4 bytes
        version u32 = 1
        N       u64           sample count
        D       u32           feature dimension
        K       u32           posterior classes, 0 = no posteriors
        flags   u32           bit0 = labels present
        zero padding to 64 bytes
    payload:
        N x D float32 features, row-major
        N uint32 labels            (if flags bit0)
        N x K float32 posteriors   (if K > 0)

Features are stored at float32 (extraction precision); everything is widened
to float64 on load so metric math runs in 64-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Optional

import numpy as np

from .errors import (
    BadMagicError,
    IoFailureError,
    NonFiniteValueError,
    TooFewSamplesError,
    TruncatedPayloadError,
    UnknownBackboneError,
    VersionMismatchError,
)
from .pixelpipe import FilterKind

_MAGIC = b"GMF1"
_VERSION = 1
_HEADER = struct.Struct("<4sIQIII36x")
_FLAG_LABELS = 1


@dataclass(frozen=True)
class FeatureSet:
    """An N x D feature matrix with optional per-sample class labels.

    `values` is float64 in memory; `labels`, when present, are class ids in
    [0, C) with C inferred as max+1. `source_tag` records provenance
    (dataset name + split) and travels into report protocol blocks.
    """

    values: np.ndarray
    labels: Optional[np.ndarray] = None
    source_tag: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, order="C")
        if arr.ndim != 2:
            raise ValueError(f"values must be 2-D (N x D), got ndim={arr.ndim}")
        n, d = arr.shape
        if n < 1 or d < 1:
            raise ValueError(f"need N >= 1 and D >= 1, got N={n}, D={d}")
        if not np.isfinite(arr).all():
            raise NonFiniteValueError("feature values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.labels is not None:
            lab = np.array(self.labels, dtype=np.int64, order="C")
            if lab.shape != (n,):
                raise ValueError(f"labels must have shape ({n},), got {lab.shape}")
            if lab.min() < 0:
                raise ValueError("labels must be non-negative class ids")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def class_count(self) -> Optional[int]:
        if self.labels is None:
            return None
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class PosteriorSet:
    """N x K class-posterior rows; each row is a probability vector."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, order="C")
        if arr.ndim != 2:
            raise ValueError(f"posteriors must be 2-D (N x K), got ndim={arr.ndim}")
        if not np.isfinite(arr).all():
            raise NonFiniteValueError("posterior values must be finite")
        if arr.min() < 0.0:
            raise ValueError("posterior entries must be non-negative")
        sums = arr.sum(axis=1)
        bad = np.abs(sums - 1.0) > 1e-5
        if bad.any():
            i = int(np.argmax(bad))
            raise ValueError(f"posterior row {i} sums to {sums[i]}, expected 1 within 1e-5")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def classes(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BackboneSpec:
    """Registry entry describing one evaluation backbone.

    `channel_scale` / `channel_offset` define the affine input normalization
    (value * scale + offset per channel, applied to raw 0..255 values). The
    display strings name each metric for report tables.
    """

    name: str
    input_resolution: int
    friendly_filter: FilterKind
    feature_dim: int
    class_count: Optional[int]
    channel_scale: tuple[float, float, float]
    channel_offset: tuple[float, float, float]
    score_name: str
    fd_name: str
    prdc_prefix: str

    def metric_display_names(self) -> dict[str, str]:
        """Display names keyed by the generic metric slot."""
        return {
            "score": self.score_name,
            "fd": self.fd_name,
            "precision": self.prdc_prefix + "Precision",
            "recall": self.prdc_prefix + "Recall",
            "density": self.prdc_prefix + "Density",
            "coverage": self.prdc_prefix + "Coverage",
        }

    @property
    def ifd_name(self) -> str:
        """Display name of the intra-class Frechet distance ("I" + FD name)."""
        return "I" + self.fd_name


@dataclass(frozen=True)
class GaussianSummary:
    """Mean vector and covariance matrix of a feature set."""

    mean: np.ndarray
    cov: np.ndarray
    sample_count: int

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64)
        cov = np.array(self.cov, dtype=np.float64, order="C")
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"shape mismatch: mean {mean.shape}, cov {cov.shape}")
        scale = max(float(np.abs(cov).max()), 1.0)
        if float(np.abs(cov - cov.T).max()) > 1e-8 * scale:
            raise ValueError("covariance must be symmetric within 1e-8 relative")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def summarize(fs: FeatureSet) -> GaussianSummary:
    """Sample mean and unbiased covariance (divisor N-1) of a feature set.

    Two-pass: the mean is computed first, then centered outer products, which
    avoids the cancellation of the single-pass formula. The covariance is
    symmetrized as (S + S^T)/2 before return.
    """
    n = fs.count
    if n < 2:
        raise TooFewSamplesError(f"need at least 2 samples, got {n}")
    mean = fs.values.mean(axis=0)
    centered = fs.values - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianSummary(mean=mean, cov=cov, sample_count=n)


# --- GMF1 -------------------------------------------------------------------

def write_features(
    fs: FeatureSet,
    post: Optional[PosteriorSet],
    destination: "str | Path | BinaryIO",
) -> None:
    """Write a feature set (and optional posteriors) as a GMF1 file.

    Byte-for-byte deterministic for identical inputs. Features and posteriors
    are stored as little-endian float32, labels as uint32.
    """
    if post is not None and post.count != fs.count:
        raise ValueError(
            f"posterior count {post.count} does not match feature count {fs.count}"
        )
    flags = _FLAG_LABELS if fs.labels is not None else 0
    k = post.classes if post is not None else 0
    header = _HEADER.pack(_MAGIC, _VERSION, fs.count, fs.dim, k, flags)
    try:
        if hasattr(destination, "write"):
            _write_payload(destination, header, fs, post)
        else:
            with open(destination, "wb") as fh:
                _write_payload(fh, header, fs, post)
    except OSError as exc:
        raise IoFailureError(f"cannot write {destination}: {exc}") from exc


def _write_payload(fh: BinaryIO, header: bytes, fs: FeatureSet, post: Optional[PosteriorSet]):
    fh.write(header)
    fh.write(fs.values.astype("<f4").tobytes(order="C"))
    if fs.labels is not None:
        fh.write(fs.labels.astype("<u4").tobytes(order="C"))
    if post is not None:
        fh.write(post.values.astype("<f4").tobytes(order="C"))


def read_features(source: "str | Path | BinaryIO") -> tuple[FeatureSet, Optional[PosteriorSet]]:
    """Read a GMF1 file; exact inverse of write_features.

    Features come back as float64 (widened from the stored float32) so all
    downstream math runs in 64-bit.
    """
    try:
        if hasattr(source, "read"):
            raw = source.read()
        else:
            raw = Path(source).read_bytes()
    except OSError as exc:
        raise IoFailureError(f"cannot read {source}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise TruncatedPayloadError(f"file is {len(raw)} bytes, header needs {_HEADER.size}")
    magic, version, n, d, k, flags = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise VersionMismatchError(f"format version {version}, expected {_VERSION}")
    has_labels = bool(flags & _FLAG_LABELS)
    expected = _HEADER.size + n * d * 4 + (n * 4 if has_labels else 0) + n * k * 4
    if len(raw) < expected:
        raise TruncatedPayloadError(f"file is {len(raw)} bytes, header promises {expected}")
    off = _HEADER.size
    feats = np.frombuffer(raw, dtype="<f4", count=n * d, offset=off).reshape(n, d)
    off += n * d * 4
    if not np.isfinite(feats).all():
        raise NonFiniteValueError("feature payload contains NaN or Inf")
    labels = None
    if has_labels:
        labels = np.frombuffer(raw, dtype="<u4", count=n, offset=off).astype(np.int64)
        off += n * 4
    post = None
    if k > 0:
        pvals = np.frombuffer(raw, dtype="<f4", count=n * k, offset=off).reshape(n, k)
        if not np.isfinite(pvals).all():
            raise NonFiniteValueError("posterior payload contains NaN or Inf")
        post = PosteriorSet(values=pvals.astype(np.float64))
    fs = FeatureSet(values=feats.astype(np.float64), labels=labels)
    return fs, post


# --- backbone registry ------------------------------------------------------

def builtin_registry() -> list[BackboneSpec]:
    """The three built-in evaluation backbones.

    Friendly filters and input resolutions follow the published per-backbone
    preprocessing; channel normalization constants are each network's
    training-time values (data, overridable via config). SwAV ships without a
    classifier head, so its score requires externally attached posteriors.
    """
    imagenet_mean = (0.485, 0.456, 0.406)
    swav_std = (0.228, 0.224, 0.225)
    swin_std = (0.229, 0.224, 0.225)
    return [
        BackboneSpec(
            name="InceptionV3",
            input_resolution=299,
            friendly_filter=FilterKind.BILINEAR,
            feature_dim=2048,
            class_count=1000,
            channel_scale=(1.0 / 127.5,) * 3,
            channel_offset=(-1.0,) * 3,
            score_name="IS",
            fd_name="FID",
            prdc_prefix="",
        ),
        BackboneSpec(
            name="SwAV",
            input_resolution=224,
            friendly_filter=FilterKind.BILINEAR,
            feature_dim=2048,
            class_count=None,
            channel_scale=tuple(1.0 / (255.0 * s) for s in swav_std),
            channel_offset=tuple(-m / s for m, s in zip(imagenet_mean, swav_std)),
            score_name="SS",
            fd_name="FSD",
            prdc_prefix="S-",
        ),
        BackboneSpec(
            name="Swin-T",
            input_resolution=224,
            friendly_filter=FilterKind.BICUBIC,
            feature_dim=768,
            class_count=1000,
            channel_scale=tuple(1.0 / (255.0 * s) for s in swin_std),
            channel_offset=tuple(-m / s for m, s in zip(imagenet_mean, swin_std)),
            score_name="TS",
            fd_name="FTD",
            prdc_prefix="T-",
        ),
    ]


def lookup_backbone(name: str, extra: Optional[list[BackboneSpec]] = None) -> BackboneSpec:
    """Resolve a backbone by name from the built-ins plus optional extras."""
    specs = list(extra or []) + builtin_registry()
    for spec in specs:
        if spec.name == name:
            return spec
    known = ", ".join(s.name for s in specs)
    raise UnknownBackboneError(f"unknown backbone {name!r} (known: {known})")
