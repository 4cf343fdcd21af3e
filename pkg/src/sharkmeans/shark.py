"""Shapley-value feature attribution for k-means and Shapley reweighted k-means.

For the characteristic function ``f(S)`` = k-means cost restricted to the
feature subset ``S``, each feature's marginal contribution is the same for
every coalition, so its Shapley value collapses to that feature's
within-cluster dispersion. :func:`shapley_exact_oracle` evaluates the
coalition sum literally and exists to check :func:`shapley_closed_form`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import as_data_matrix, as_labels, uniform_weights
from .lloyd import (
    MAX_ITER,
    ClusterModel,
    EmptyClusterError,
    InitMethod,
    initialize,
    lloyd_engine,
    run_kmeans,
)

MAX_ORACLE_FEATURES = 15
FLOOR_SCALE = 1e-12


@dataclass(frozen=True)
class GapReport:
    arithmetic_mean: float
    harmonic_mean: float
    epsilon: float
    lower_bound: float


def shapley_closed_form(X, labels, Z) -> np.ndarray:
    """Per-feature Shapley values: ``phi_v = sum_l sum_{i in C_l} (x_iv - z_lv)**2``."""
    X = as_data_matrix(X)
    Z = np.asarray(Z, dtype=np.float64)
    k = Z.shape[0]
    labels = as_labels(labels, k)
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise EmptyClusterError(int(np.flatnonzero(counts == 0)[0]))
    return ((X - Z[labels]) ** 2).sum(axis=0)


def coalition_cost(X, labels, Z, features) -> float:
    """k-means cost using only the columns in ``features``."""
    cols = list(features)
    if not cols:
        return 0.0
    diff = X[:, cols] - Z[labels][:, cols]
    return float((diff**2).sum())


def shapley_exact_oracle(X, labels, Z) -> np.ndarray:
    """Shapley values by enumerating every coalition (exponential in ``m``)."""
    X = as_data_matrix(X)
    Z = np.asarray(Z, dtype=np.float64)
    labels = as_labels(labels, Z.shape[0])
    m = X.shape[1]
    if m > MAX_ORACLE_FEATURES:
        raise ValueError(f"exact Shapley enumeration refused for m={m} > {MAX_ORACLE_FEATURES}")
    value = np.empty(1 << m)
    for mask in range(1 << m):
        value[mask] = coalition_cost(X, labels, Z, [v for v in range(m) if mask >> v & 1])
    m_fact = math.factorial(m)
    coef = [math.factorial(s) * math.factorial(m - s - 1) / m_fact for s in range(m)]
    phi = np.zeros(m)
    for v in range(m):
        bit = 1 << v
        for mask in range(1 << m):
            if mask & bit:
                continue
            phi[v] += coef[bin(mask).count("1")] * (value[mask | bit] - value[mask])
    return phi


def _clamped(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 1 or phi.size == 0:
        raise ValueError("Shapley profile must be a non-empty 1-D vector")
    if np.any(phi < 0):
        raise ValueError("Shapley values of a k-means cost are non-negative")
    floor = FLOOR_SCALE * max(1.0, float(phi.sum()))
    return np.maximum(phi, floor)


def update_weights(phi) -> np.ndarray:
    """Inverse-Shapley weights normalised to the simplex.

    Values below ``1e-12 * max(1, sum(phi))`` are raised to that floor first, so a
    zero-dispersion feature gets (almost) all of the weight instead of a division by zero.
    """
    inv = 1.0 / _clamped(phi)
    return inv / inv.sum()


def shark_objective(phi) -> float:
    """Harmonic mean of the (floored) Shapley values."""
    phi = _clamped(phi)
    return float(phi.size / (1.0 / phi).sum())


def comparable_kmeans_objective(phi) -> float:
    """k-means cost divided by the number of features (arithmetic mean of ``phi``)."""
    phi = np.asarray(phi, dtype=np.float64)
    return float(phi.mean())


def gap_bound(phi) -> float:
    phi = np.asarray(phi, dtype=np.float64)
    hi, lo = phi.max(), phi.min()
    return float((hi - lo) ** 2 / (2.0 * (hi + lo)))


def gap_report(phi) -> GapReport:
    """Arithmetic minus harmonic mean of ``phi`` and its range-based lower bound."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 1 or phi.size < 2:
        raise ValueError("gap bound needs at least two features")
    if np.any(phi <= 0):
        raise ValueError("gap bound needs strictly positive Shapley values")
    am = comparable_kmeans_objective(phi)
    hm = shark_objective(phi)
    return GapReport(arithmetic_mean=am, harmonic_mean=hm, epsilon=am - hm, lower_bound=gap_bound(phi))


def _shark_reweight(X, labels, Z, w, iteration):
    return update_weights(shapley_closed_form(X, labels, Z))


def _shark_cost(X, labels, Z, w) -> float:
    return shark_objective(shapley_closed_form(X, labels, Z))


def run_shark(X, k: int, init=InitMethod.UNIFORM, rng=None, max_iter: int = MAX_ITER) -> ClusterModel:
    """Shapley reweighted k-means.

    Starts from uniform weights; each iteration assigns points under the current
    weights, recomputes centroids, then sets the weights to the normalised inverse
    per-feature dispersions. Stops when the labels repeat or after ``max_iter``
    iterations. The reported objective is the harmonic mean of the final dispersions.
    """
    X = as_data_matrix(X)
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(rng)
    Z0 = initialize(X, k, init, rng)
    return lloyd_engine(X, Z0, uniform_weights(X.shape[1]), _shark_cost, reweight=_shark_reweight, max_iter=max_iter)


def first_iteration_objectives(X, Z0) -> tuple[float, float]:
    """One iteration of SHARK and of k-means from the same centroids.

    Returns ``(shark objective, k-means objective / m)``; either is ``inf`` if that
    run emptied a cluster.
    """
    X = as_data_matrix(X)
    Z0 = np.asarray(Z0, dtype=np.float64)
    k = Z0.shape[0]
    shark = run_shark(X, k, init=Z0, max_iter=1)
    km = run_kmeans(X, k, init=Z0, max_iter=1)
    return shark.objective, km.objective / X.shape[1]
