"""Dataset validation, column normalization and weighted distances."""

from __future__ import annotations

import numpy as np

WEIGHT_SUM_TOL = 1e-9


def as_data_matrix(X) -> np.ndarray:
    """Return ``X`` as a float64 ``(n, m)`` array, rejecting empty or non-finite input."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"data matrix must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"data matrix must have n >= 1 and m >= 1, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data matrix contains NaN or infinite entries")
    return X


def as_labels(labels, k: int | None = None) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-D vector")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        if not np.all(np.equal(np.mod(labels, 1), 0)):
            raise ValueError("labels must be integers")
    labels = labels.astype(np.intp)
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be non-negative")
    if k is not None and labels.size and labels.max() >= k:
        raise ValueError(f"label {labels.max()} out of range for k={k}")
    return labels


def cluster_sizes(labels, k: int) -> np.ndarray:
    return np.bincount(as_labels(labels, k), minlength=k)


def has_empty_cluster(labels, k: int) -> bool:
    """True if some cluster index in ``[0, k)`` has no members."""
    return bool(np.any(cluster_sizes(labels, k) == 0))


def uniform_weights(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def check_weights(w, m: int | None = None) -> np.ndarray:
    """Validate a simplex weight vector."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("weights must be a 1-D vector")
    if m is not None and w.shape[0] != m:
        raise ValueError(f"expected {m} weights, got {w.shape[0]}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def _safe_scale(col_stat: np.ndarray, centred: np.ndarray) -> np.ndarray:
    out = np.zeros_like(centred)
    ok = col_stat > 0
    out[:, ok] = centred[:, ok] / col_stat[ok]
    return out


def range_normalize(X) -> np.ndarray:
    """Centre each column on its mean and divide by its range.

    Constant columns become all zero.
    """
    X = as_data_matrix(X)
    spread = X.max(axis=0) - X.min(axis=0)
    return _safe_scale(spread, X - X.mean(axis=0))


def zscore_normalize(X) -> np.ndarray:
    """Standardize columns with the population (1/n) standard deviation.

    Zero-variance columns become all zero.
    """
    X = as_data_matrix(X)
    return _safe_scale(X.std(axis=0), X - X.mean(axis=0))


NORMALIZERS = {
    "range": range_normalize,
    "zscore": zscore_normalize,
    "none": as_data_matrix,
}


def normalize(X, method: str) -> np.ndarray:
    try:
        fn = NORMALIZERS[method]
    except KeyError:
        raise ValueError(f"unknown normalization {method!r}; choose from {sorted(NORMALIZERS)}") from None
    return fn(X)


def weighted_sqdist(x, z, w) -> float:
    """Weighted squared Euclidean distance ``sum_v w_v (x_v - z_v)**2``."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if not (x.shape == z.shape == w.shape) or x.ndim != 1:
        raise ValueError(f"dimension mismatch: x{x.shape}, z{z.shape}, w{w.shape}")
    return float(np.dot(w, (x - z) ** 2))


def weighted_sqdist_matrix(X: np.ndarray, Z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``(n, k)`` matrix of weighted squared distances from every point to every centroid.

    Differences are formed explicitly (no ``|x|^2 - 2xz + |z|^2`` expansion) so that
    geometrically equidistant centroids produce bit-identical distances.
    """
    if X.shape[1] != Z.shape[1] or w.shape[0] != X.shape[1]:
        raise ValueError(f"dimension mismatch: X{X.shape}, Z{Z.shape}, w{w.shape}")
    D = np.empty((X.shape[0], Z.shape[0]))
    for t in range(Z.shape[0]):
        D[:, t] = ((X - Z[t]) ** 2) @ w
    return D
