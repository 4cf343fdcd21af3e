"""Weighted Lloyd iteration: seeding, assignment, centroid update and plain k-means."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import as_data_matrix, as_labels, uniform_weights, weighted_sqdist_matrix

MAX_ITER = 300


class InitMethod(str, enum.Enum):
    UNIFORM = "uniform"
    KMEANSPP = "kmeans++"


class EmptyClusterError(ValueError):
    """Raised when a cluster has no members; ``cluster`` holds its index."""

    def __init__(self, cluster: int):
        super().__init__(f"cluster {cluster} is empty")
        self.cluster = cluster


class DegenerateWeightsError(ValueError):
    """Raised by a reweighting rule that produced no usable weight."""


@dataclass
class ClusterModel:
    labels: np.ndarray | None
    centroids: np.ndarray | None
    weights: np.ndarray | None
    objective: float
    iterations: int
    converged: bool
    failed: bool
    history: list[float] = field(default_factory=list)
    reason: str = ""

    @property
    def k(self) -> int:
        return 0 if self.centroids is None else self.centroids.shape[0]


def init_uniform(X, k: int, rng=None) -> np.ndarray:
    """Pick ``k`` data points with distinct values uniformly without replacement."""
    X = as_data_matrix(X)
    rng = np.random.default_rng(rng)
    if k < 1:
        raise ValueError("k must be >= 1")
    order = rng.permutation(X.shape[0])
    # first occurrence of each distinct row along the random order
    _, first = np.unique(X[order], axis=0, return_index=True)
    if first.size < k:
        raise ValueError(f"cannot pick {k} distinct centroids from {first.size} distinct rows")
    chosen = order[np.sort(first)[:k]]
    return X[chosen].copy()


def init_kmeanspp(X, k: int, rng=None) -> np.ndarray:
    """D^2 seeding: each new centroid drawn with probability proportional to the
    squared distance to the nearest centroid already chosen."""
    X = as_data_matrix(X)
    rng = np.random.default_rng(rng)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            # every point coincides with a chosen centroid
            idx = rng.integers(n)
        centers[j] = X[idx]
        closest = np.minimum(closest, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


def initialize(X, k: int, init, rng=None) -> np.ndarray:
    if isinstance(init, np.ndarray):
        if init.shape != (k, np.shape(X)[1]):
            raise ValueError(f"initial centroids must have shape {(k, np.shape(X)[1])}")
        return np.array(init, dtype=np.float64)
    method = InitMethod(init)
    if method is InitMethod.UNIFORM:
        return init_uniform(X, k, rng)
    return init_kmeanspp(X, k, rng)


def assign(X, Z, w=None) -> np.ndarray:
    """Nearest-centroid labels under weighted squared distance.

    Exact ties go to the smallest centroid index.
    """
    X = as_data_matrix(X)
    Z = np.asarray(Z, dtype=np.float64)
    w = uniform_weights(X.shape[1]) if w is None else np.asarray(w, dtype=np.float64)
    return np.argmin(weighted_sqdist_matrix(X, Z, w), axis=1)


def update_centroids(X, labels, k: int) -> np.ndarray:
    """Component-wise mean of each cluster; raises EmptyClusterError on an empty one."""
    X = as_data_matrix(X)
    labels = as_labels(labels, k)
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyClusterError(int(empty[0]))
    onehot = np.zeros((X.shape[0], k))
    onehot[np.arange(X.shape[0]), labels] = 1.0
    return (onehot.T @ X) / counts[:, None]


def kmeans_objective(X, labels, Z) -> float:
    """Total within-cluster sum of squared Euclidean distances."""
    X = as_data_matrix(X)
    Z = np.asarray(Z, dtype=np.float64)
    labels = as_labels(labels, Z.shape[0])
    return float(((X - Z[labels]) ** 2).sum())


Reweight = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int], np.ndarray]
Objective = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], float]


def _identity(w: np.ndarray) -> np.ndarray:
    return w


def lloyd_engine(
    X: np.ndarray,
    Z0: np.ndarray,
    w0: np.ndarray,
    objective: Objective,
    reweight: Reweight | None = None,
    distance_weights: Callable[[np.ndarray], np.ndarray] = _identity,
    max_iter: int = MAX_ITER,
) -> ClusterModel:
    """Run assign -> update centroids -> reweight until the labels stop changing.

    ``reweight(X, labels, Z, w, iteration)`` returns the next weight vector and
    ``distance_weights`` maps it to the per-feature multipliers used for assignment.
    An empty cluster or degenerate weights end the run as a failed model.
    ``history`` holds ``objective`` after every completed iteration.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    k = Z0.shape[0]
    Z = np.array(Z0, dtype=np.float64)
    w = np.array(w0, dtype=np.float64)
    labels = None
    history: list[float] = []
    converged = False
    it = 0
    try:
        while True:
            new = assign(X, Z, distance_weights(w))
            if labels is not None and np.array_equal(new, labels):
                converged = True
                break
            if it >= max_iter:
                break
            labels = new
            Z = update_centroids(X, labels, k)
            if reweight is not None:
                w = reweight(X, labels, Z, w, it)
            it += 1
            history.append(objective(X, labels, Z, w))
    except (EmptyClusterError, DegenerateWeightsError) as exc:
        return ClusterModel(
            labels=labels,
            centroids=Z,
            weights=w,
            objective=np.inf,
            iterations=it,
            converged=False,
            failed=True,
            history=history,
            reason=str(exc),
        )
    return ClusterModel(
        labels=labels,
        centroids=Z,
        weights=w,
        objective=history[-1],
        iterations=it,
        converged=converged,
        failed=False,
        history=history,
    )


def _kmeans_cost(X, labels, Z, w) -> float:
    return kmeans_objective(X, labels, Z)


def run_kmeans(X, k: int, init=InitMethod.KMEANSPP, rng=None, max_iter: int = MAX_ITER) -> ClusterModel:
    """Lloyd's algorithm with uniform feature weights."""
    X = as_data_matrix(X)
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(rng)
    Z0 = initialize(X, k, init, rng)
    return lloyd_engine(X, Z0, uniform_weights(X.shape[1]), _kmeans_cost, max_iter=max_iter)
