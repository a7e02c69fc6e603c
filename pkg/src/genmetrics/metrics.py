"""The metric suite: Frechet distance, classifier score, precision/recall,
density/coverage, intra-class Frechet distance, and top-k accuracy.

All pairwise-distance work runs blockwise over rows so memory stays bounded
and blocks can be fanned out to threads; every reduction is either a boolean
OR or an integer sum, so results are bit-identical regardless of worker
count. Distances are plain sqrt-of-squared-differences (no algebraic
shortcuts), which keeps the fast path exactly equal to a brute-force
reference.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    ClassTooSmallError,
    DimensionMismatchError,
    EmptyChunkError,
    KTooLargeError,
    LabelMismatchError,
    LabelOutOfRangeError,
    NonConvergentEigensolveError,
)
from .featurestore import FeatureSet, GaussianSummary, PosteriorSet, summarize

# Element budget for one difference tensor (block_rows * block_cols * D
# float64 values); keeps peak memory per worker near 256 MB.
_BLOCK_ELEMENTS = 1 << 25


def worker_count() -> int:
    """Thread cap for pairwise-distance blocks (GENMETRICS_THREADS, default 1)."""
    raw = os.environ.get("GENMETRICS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _block_len(dim: int) -> int:
    """Square-ish block edge so the diff tensor stays inside the budget."""
    return max(16, int((_BLOCK_ELEMENTS / max(dim, 1)) ** 0.5))


@dataclass(frozen=True)
class ManifoldParams:
    """Neighbor counts for the support estimates (Euclidean distances)."""

    k_pr: int = 3
    k_dc: int = 5

    def __post_init__(self):
        if self.k_pr < 1 or self.k_dc < 1:
            raise KTooLargeError("neighbor counts must be at least 1")

    def validate_for(self, n: int, m: int) -> None:
        limit = min(n, m)
        for label, k in (("k_pr", self.k_pr), ("k_dc", self.k_dc)):
            if k >= limit:
                raise KTooLargeError(f"{label}={k} must be < min(N, M) = {limit}")


@dataclass(frozen=True)
class PrdcResult:
    precision: float
    recall: float
    density: float
    coverage: float


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """Frechet distance between two Gaussian summaries.

    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), with the cross
    term evaluated as sqrt(S_a)^T S_b sqrt(S_a) via symmetric
    eigendecomposition, eigenvalues clamped at zero. A clearly negative
    eigenvalue (below -1e-6 of the largest) or a negative total triggers a
    warning; the result is clamped to >= 0.
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"summary dims differ: {a.dim} vs {b.dim}")
    dmu = a.mean - b.mean
    try:
        eva, vec = np.linalg.eigh(a.cov)
    except np.linalg.LinAlgError as exc:
        raise NonConvergentEigensolveError(f"eigendecomposition failed: {exc}") from exc
    sqrt_a = (vec * np.sqrt(np.clip(eva, 0.0, None))) @ vec.T
    inner = sqrt_a @ b.cov @ sqrt_a
    inner = (inner + inner.T) / 2.0
    try:
        evm = np.linalg.eigvalsh(inner)
    except np.linalg.LinAlgError as exc:
        raise NonConvergentEigensolveError(f"eigendecomposition failed: {exc}") from exc
    top = float(evm[-1])
    if top > 0.0 and float(evm[0]) < -1e-6 * top:
        warnings.warn(
            f"product matrix has eigenvalue {evm[0]:.3e} (top {top:.3e}); clamping to 0",
            RuntimeWarning,
            stacklevel=2,
        )
    trace_sqrt = float(np.sqrt(np.clip(evm, 0.0, None)).sum())
    fd = float(dmu @ dmu) + float(np.trace(a.cov)) + float(np.trace(b.cov)) - 2.0 * trace_sqrt
    if fd < -1e-6:
        warnings.warn(f"Frechet distance came out {fd:.3e}; clamping to 0", RuntimeWarning,
                      stacklevel=2)
    return max(fd, 0.0)


def classifier_score(post: PosteriorSet, splits: int = 1) -> tuple[float, float]:
    """Exponentiated mean KL from per-sample posteriors to the chunk marginal.

    Rows are partitioned into `splits` contiguous chunks; each chunk yields
    exp(mean_i KL(p(y|x_i) || p_hat)) with p_hat the chunk's empirical class
    marginal. Returns (mean, population std) over chunks; std is 0 for a
    single split. Zero posterior entries contribute 0 (0 log 0 := 0).
    """
    if splits < 1:
        raise ValueError("splits must be >= 1")
    if splits > post.count:
        raise EmptyChunkError(f"{splits} splits over {post.count} rows leaves empty chunks")
    scores = []
    for chunk in np.array_split(post.values, splits):
        if chunk.shape[0] == 0:
            raise EmptyChunkError("empty chunk")
        marginal = chunk.mean(axis=0)
        mask = chunk > 0.0
        # p > 0 forces marginal > 0 on the same column, so the log is safe.
        logs = np.zeros_like(chunk)
        np.log(chunk, out=logs, where=mask)
        log_marginal = np.log(marginal, where=marginal > 0.0,
                              out=np.zeros_like(marginal))
        kl_rows = (chunk * (logs - log_marginal) * mask).sum(axis=1)
        scores.append(float(np.exp(kl_rows.mean())))
    return float(np.mean(scores)), float(np.std(scores))


def _distance_block(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Euclidean distances between every row of x and every row of y.

    Plain sqrt of summed squared differences. No inner-product expansion:
    the value for a pair must not depend on how the work is blocked.
    """
    diff = x[:, np.newaxis, :] - y[np.newaxis, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def _map_blocks(fn, n_rows: int, block_rows: int):
    """Apply fn(start, stop) over row blocks in order, possibly in threads."""
    spans = [(s, min(s + block_rows, n_rows)) for s in range(0, n_rows, block_rows)]
    workers = worker_count()
    if workers == 1 or len(spans) == 1:
        return spans, [fn(s, e) for s, e in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return spans, list(pool.map(lambda se: fn(*se), spans))


def knn_radii(fs: FeatureSet, k: int) -> np.ndarray:
    """Distance from each row to its k-th nearest other row (self excluded).

    Equal distances are interchangeable for the radius value, so the result
    is deterministic without explicit index tie-breaking.
    """
    n = fs.count
    if not 1 <= k < n:
        raise KTooLargeError(f"k={k} must satisfy 1 <= k < N={n}")
    values = fs.values
    col_block = _block_len(fs.dim)
    # A row block needs its full distance row resident for the selection.
    row_block = max(1, min(n, _BLOCK_ELEMENTS // n))

    def block(start: int, stop: int) -> np.ndarray:
        dist = np.empty((stop - start, n))
        for cs in range(0, n, col_block):
            ce = min(cs + col_block, n)
            dist[:, cs:ce] = _distance_block(values[start:stop], values[cs:ce])
        dist[np.arange(stop - start), np.arange(start, stop)] = np.inf
        return np.partition(dist, k - 1, axis=1)[:, k - 1]

    _, parts = _map_blocks(block, n, row_block)
    return np.concatenate(parts)


def prdc(src: FeatureSet, tgt: FeatureSet, params: ManifoldParams) -> PrdcResult:
    """Precision, recall, density, and coverage of tgt against src.

    Membership uses closed balls (<=): a point exactly on a sphere boundary
    counts as inside. Precision and recall share the same cross-distance
    values, so precision(a, b) == recall(b, a) holds exactly for equal k.
    """
    if src.dim != tgt.dim:
        raise DimensionMismatchError(f"feature dims differ: {src.dim} vs {tgt.dim}")
    params.validate_for(src.count, tgt.count)
    n, m = src.count, tgt.count
    radii_pr = knn_radii(src, params.k_pr)
    radii_dc = radii_pr if params.k_dc == params.k_pr else knn_radii(src, params.k_dc)
    radii_tgt = knn_radii(tgt, params.k_pr)
    edge = _block_len(src.dim)

    def block(start: int, stop: int):
        rows = src.values[start:stop]
        hit_any = np.zeros(m, dtype=bool)
        counts = np.zeros(m, dtype=np.int64)
        cov = np.zeros(stop - start, dtype=bool)
        in_tgt = np.zeros(stop - start, dtype=bool)
        r_pr = radii_pr[start:stop, np.newaxis]
        r_dc = radii_dc[start:stop, np.newaxis]
        for cs in range(0, m, edge):
            ce = min(cs + edge, m)
            d = _distance_block(rows, tgt.values[cs:ce])
            hit_pr = d <= r_pr
            hit_dc = d <= r_dc
            hit_any[cs:ce] |= hit_pr.any(axis=0)   # target inside some precision ball
            counts[cs:ce] += hit_dc.sum(axis=0)    # density ball memberships
            cov |= hit_dc.any(axis=1)              # source ball covers some target
            in_tgt |= (d <= radii_tgt[np.newaxis, cs:ce]).any(axis=1)
        return hit_any, counts, cov, in_tgt

    in_src_manifold = np.zeros(m, dtype=bool)
    density_counts = np.zeros(m, dtype=np.int64)
    covered = np.zeros(n, dtype=bool)
    in_tgt_manifold = np.zeros(n, dtype=bool)
    spans, parts = _map_blocks(block, n, edge)
    for (start, stop), (hit_any, counts, cov, in_tgt) in zip(spans, parts):
        in_src_manifold |= hit_any
        density_counts += counts
        covered[start:stop] = cov
        in_tgt_manifold[start:stop] = in_tgt
    return PrdcResult(
        precision=float(in_src_manifold.sum() / m),
        recall=float(in_tgt_manifold.sum() / n),
        density=float(density_counts.sum() / (params.k_dc * m)),
        coverage=float(covered.sum() / n),
    )


def intra_class_fd(src: FeatureSet, tgt: FeatureSet) -> float:
    """Unweighted mean of per-class Frechet distances.

    Both sets must be labeled with identical class sets, and every class
    needs at least two samples on each side.
    """
    if src.labels is None or tgt.labels is None:
        raise LabelMismatchError("both feature sets must carry labels")
    if src.dim != tgt.dim:
        raise DimensionMismatchError(f"feature dims differ: {src.dim} vs {tgt.dim}")
    src_classes = set(np.unique(src.labels).tolist())
    tgt_classes = set(np.unique(tgt.labels).tolist())
    if src_classes != tgt_classes:
        raise LabelMismatchError(
            f"label sets differ: {sorted(src_classes)} vs {sorted(tgt_classes)}"
        )
    distances = []
    for cls in sorted(src_classes):
        s_rows = src.values[src.labels == cls]
        t_rows = tgt.values[tgt.labels == cls]
        if s_rows.shape[0] < 2:
            raise ClassTooSmallError(cls, "source")
        if t_rows.shape[0] < 2:
            raise ClassTooSmallError(cls, "target")
        distances.append(frechet_distance(
            summarize(FeatureSet(values=s_rows)),
            summarize(FeatureSet(values=t_rows)),
        ))
    return float(np.mean(distances))


def top_k_accuracy(post: PosteriorSet, labels: np.ndarray, k: int) -> float:
    """Fraction of rows whose true label is among the k largest posteriors.

    Ties at the k-th value go to the smaller class index (stable sort on
    descending probability).
    """
    labels = np.asarray(labels)
    if labels.shape != (post.count,):
        raise ValueError(f"labels must have shape ({post.count},), got {labels.shape}")
    if not 1 <= k <= post.classes:
        raise ValueError(f"k={k} must satisfy 1 <= k <= K={post.classes}")
    if labels.min() < 0 or labels.max() >= post.classes:
        raise LabelOutOfRangeError(
            f"labels must lie in [0, {post.classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    order = np.argsort(-post.values, axis=1, kind="stable")[:, :k]
    hits = (order == labels[:, np.newaxis]).any(axis=1)
    return float(hits.sum() / post.count)
