"""Independent reference implementations used only by the test suite.

Everything here is deliberately written with a different algorithm (or plain
loops) than the library: Denman-Beavers iteration instead of
eigendecomposition for the matrix square root, O(N*M) loops for neighbor
radii and manifold membership, and arbitrary-precision arithmetic for
covariance. Keep it that way; these are the oracles.
"""

import numpy as np


def denman_beavers_sqrt(mat: np.ndarray, iterations: int = 100, tol: float = 1e-14) -> np.ndarray:
    """Matrix square root via the Denman-Beavers iteration.

    Converges for matrices with no eigenvalues on the closed negative real
    axis, which covers products of positive-definite covariances.
    """
    y = np.array(mat, dtype=np.float64)
    z = np.eye(y.shape[0])
    for _ in range(iterations):
        y_next = 0.5 * (y + np.linalg.inv(z))
        z_next = 0.5 * (z + np.linalg.inv(y))
        delta = np.abs(y_next - y).max() / max(np.abs(y_next).max(), 1e-300)
        y, z = y_next, z_next
        if delta < tol:
            break
    return y


def frechet_distance_oracle(mean_a, cov_a, mean_b, cov_b) -> float:
    """Frechet distance with the cross term from Denman-Beavers."""
    diff = np.asarray(mean_a, dtype=np.float64) - np.asarray(mean_b, dtype=np.float64)
    cross = denman_beavers_sqrt(np.asarray(cov_a) @ np.asarray(cov_b))
    return float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(cross))


def _distance_row(point: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Distances from one point to every row of `others`."""
    return np.sqrt(((others - point) ** 2).sum(axis=1))


def knn_radii_brute(values: np.ndarray, k: int) -> np.ndarray:
    """k-th nearest-other-row distance per row, by full sort, self deleted."""
    n = values.shape[0]
    radii = np.empty(n)
    for i in range(n):
        dists = _distance_row(values[i], values)
        dists = np.delete(dists, i)
        radii[i] = np.sort(dists)[k - 1]
    return radii


def prdc_brute(src: np.ndarray, tgt: np.ndarray, k_pr: int, k_dc: int):
    """Precision/recall/density/coverage by direct O(N*M) enumeration."""
    n, m = src.shape[0], tgt.shape[0]
    r_pr = knn_radii_brute(src, k_pr)
    r_dc = knn_radii_brute(src, k_dc)
    r_tg = knn_radii_brute(tgt, k_pr)
    dist = np.empty((n, m))
    for i in range(n):
        dist[i] = _distance_row(src[i], tgt)
    precision = sum(bool((dist[:, j] <= r_pr).any()) for j in range(m)) / m
    recall = sum(bool((dist[i, :] <= r_tg).any()) for i in range(n)) / n
    density = sum(int((dist[:, j] <= r_dc).sum()) for j in range(m)) / (k_dc * m)
    coverage = sum(bool((dist[i, :] <= r_dc[i]).any()) for i in range(n)) / n
    return precision, recall, density, coverage


def gaussian_moments_mp(values: np.ndarray, dps: int = 50):
    """Mean and unbiased covariance at `dps` decimal digits (single pass)."""
    import mpmath as mp

    with mp.workdps(dps):
        n, d = values.shape
        cols = [[mp.mpf(float(v)) for v in values[:, j]] for j in range(d)]
        means = [mp.fsum(col) / n for col in cols]
        cov = np.empty((d, d))
        for a in range(d):
            for b in range(a, d):
                raw = mp.fsum(x * y for x, y in zip(cols[a], cols[b]))
                cov[a, b] = cov[b, a] = float((raw - n * means[a] * means[b]) / (n - 1))
        return np.array([float(mu) for mu in means]), cov


def classifier_score_mp(posteriors: np.ndarray, dps: int = 50) -> float:
    """Single-split score via arbitrary-precision KL arithmetic."""
    import mpmath as mp

    with mp.workdps(dps):
        n, k = posteriors.shape
        rows = [[mp.mpf(float(p)) for p in row] for row in posteriors]
        marginal = [mp.fsum(rows[i][y] for i in range(n)) / n for y in range(k)]
        total = mp.mpf(0)
        for row in rows:
            for p, q in zip(row, marginal):
                if p > 0:
                    total += p * mp.log(p / q)
        return float(mp.e ** (total / n))
