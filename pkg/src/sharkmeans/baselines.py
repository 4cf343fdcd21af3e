"""Reference feature-weighted k-means baselines: FWSA and LW-k-means.

FWSA adapts weights from between/within-cluster separation ratios and has no
tuning parameter. LW-k-means produces sparse weights through soft thresholding
and needs ``lambda`` (chosen by stability selection or a fixed value with an
order-of-magnitude fallback), ``alpha`` and ``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import as_data_matrix, as_labels, uniform_weights
from .lloyd import (
    MAX_ITER,
    ClusterModel,
    DegenerateWeightsError,
    EmptyClusterError,
    InitMethod,
    initialize,
    lloyd_engine,
)
from .metrics import ari

DEGENERATE_RATIO_FACTOR = 10.0
DEFAULT_BETA = 4.0
DEFAULT_START_LAMBDA = 0.005
FALLBACK_DECADES = 8


# --------------------------------------------------------------------- FWSA


def fwsa_separations(X, labels, Z) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature within-cluster (``a``) and between-cluster (``b``) separations,
    both measured with squared differences."""
    X = as_data_matrix(X)
    Z = np.asarray(Z, dtype=np.float64)
    k = Z.shape[0]
    labels = as_labels(labels, k)
    sizes = np.bincount(labels, minlength=k)
    if np.any(sizes == 0):
        raise EmptyClusterError(int(np.flatnonzero(sizes == 0)[0]))
    a = ((X - Z[labels]) ** 2).sum(axis=0)
    b = (sizes[:, None] * (Z - X.mean(axis=0)) ** 2).sum(axis=0)
    return a, b


def fwsa_ratios(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ratios = np.zeros_like(a)
    finite = a > 0
    ratios[finite] = b[finite] / a[finite]
    compact = ~finite & (b > 0)
    if compact.any():
        top = ratios[finite].max() if finite.any() else 0.0
        ratios[compact] = DEGENERATE_RATIO_FACTOR * top
    return ratios


def fwsa_update_weights(prev, a, b) -> np.ndarray:
    """Average the previous weights with the normalised separation ratios.

    A feature with zero within-cluster separation gets ten times the largest
    finite ratio. If no ratio is positive the weights are returned unchanged.
    """
    prev = np.asarray(prev, dtype=np.float64)
    ratios = fwsa_ratios(a, b)
    total = ratios.sum()
    if not np.isfinite(total) or total <= 0:
        return prev.copy()
    return 0.5 * (prev + ratios / total)


def _fwsa_reweight(X, labels, Z, w, iteration):
    a, b = fwsa_separations(X, labels, Z)
    return fwsa_update_weights(w, a, b)


def _fwsa_cost(X, labels, Z, w) -> float:
    return float(((X - Z[labels]) ** 2).sum(axis=0) @ w)


def run_fwsa(X, k: int, init=InitMethod.UNIFORM, rng=None, max_iter: int = MAX_ITER) -> ClusterModel:
    """FWSA k-means; expects z-scored data. Objective is the weighted within-cluster cost."""
    X = as_data_matrix(X)
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(rng)
    Z0 = initialize(X, k, init, rng)
    return lloyd_engine(X, Z0, uniform_weights(X.shape[1]), _fwsa_cost, reweight=_fwsa_reweight, max_iter=max_iter)


# --------------------------------------------------------------- LW-k-means


@dataclass(frozen=True)
class LwParams:
    """``alpha=None`` means: set it to ``mean(D) * 2 / beta`` from the first iteration's dispersions."""

    lam: float = 0.0
    alpha: float | None = None
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if not self.beta > 1:
            raise ValueError("beta must be > 1")


class LambdaSearchError(RuntimeError):
    pass


def lw_dispersion(X, labels, Z) -> np.ndarray:
    """``D_v = sum_i sum_l u_il (x_iv - z_lv)**2`` with hard memberships ``u``."""
    X = as_data_matrix(X)
    Z = np.asarray(Z, dtype=np.float64)
    labels = as_labels(labels, Z.shape[0])
    D = np.zeros(X.shape[1])
    for ell in range(Z.shape[0]):
        members = X[labels == ell]
        D += ((members - Z[ell]) ** 2).sum(axis=0)
    return D


def soft_threshold(x, lam: float):
    """``S(x, lam)``: shrink ``x`` towards zero by ``lam``, zero inside ``[-lam, lam]``."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    out = np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def lw_update_weights(D, params: LwParams, alpha: float | None = None) -> np.ndarray:
    """Closed-form LW weight step. Zero dispersion and non-positive shrunk values give 0."""
    D = np.asarray(D, dtype=np.float64)
    alpha = params.alpha if alpha is None else alpha
    if alpha is None:
        raise ValueError("alpha is unset")
    w = np.zeros_like(D)
    pos = D > 0
    base = soft_threshold(alpha / D[pos], params.lam) / params.beta
    base = np.atleast_1d(base)
    # a negative base has no real fractional power
    ok = base > 0
    vals = np.zeros_like(base)
    vals[ok] = base[ok] ** (1.0 / (params.beta - 1.0))
    w[pos] = vals
    return w


def lw_distance_weights(w: np.ndarray, params: LwParams) -> np.ndarray:
    return w**params.beta + params.lam * np.abs(w)


def lw_objective(D: np.ndarray, w: np.ndarray, params: LwParams, alpha: float) -> float:
    return float(lw_distance_weights(w, params) @ D - alpha * w.sum())


def run_lw(
    X,
    k: int,
    params: LwParams = LwParams(),
    init=InitMethod.KMEANSPP,
    rng=None,
    max_iter: int = MAX_ITER,
    fixed_weights: bool = False,
) -> ClusterModel:
    """LW-k-means by block-coordinate descent.

    Points go to the centroid minimising ``sum_v (w_v**beta + lam*|w_v|) (x_v - z_v)**2``,
    then centroids and weights are updated in turn. An all-zero weight vector fails
    the run. With ``fixed_weights`` the uniform starting weights are never updated.
    """
    X = as_data_matrix(X)
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(rng)
    Z0 = initialize(X, k, init, rng)
    state = {"alpha": params.alpha}

    def reweight(X, labels, Z, w, iteration):
        D = lw_dispersion(X, labels, Z)
        if state["alpha"] is None:
            state["alpha"] = float(D.mean() * 2.0 / params.beta)
        if fixed_weights:
            return w
        new = lw_update_weights(D, params, state["alpha"])
        if not np.any(new > 0):
            raise DegenerateWeightsError(f"all LW weights zero at lambda={params.lam}")
        return new

    def cost(X, labels, Z, w):
        return lw_objective(lw_dispersion(X, labels, Z), w, params, state["alpha"])

    return lloyd_engine(
        X,
        Z0,
        uniform_weights(X.shape[1]),
        cost,
        reweight=reweight,
        distance_weights=lambda w: lw_distance_weights(w, params),
        max_iter=max_iter,
    )


def fit_lw_with_fallback(
    X,
    k: int,
    start_lambda: float = DEFAULT_START_LAMBDA,
    params: LwParams = LwParams(),
    init=InitMethod.KMEANSPP,
    rng=None,
    decades: int = FALLBACK_DECADES,
) -> tuple[float, ClusterModel]:
    """Fit with ``start_lambda`` and divide it by ten until a run succeeds.

    Tries ``start_lambda * 10**-j`` for ``j = 0 .. decades``.
    """
    if not start_lambda > 0:
        raise ValueError("start_lambda must be > 0")
    rng = np.random.default_rng(rng)
    for j in range(decades + 1):
        lam = start_lambda * 10.0**-j
        model = run_lw(X, k, replace(params, lam=lam), init=init, rng=rng)
        if not model.failed:
            return lam, model
    raise LambdaSearchError(f"no lambda in [{start_lambda:g} .. {start_lambda * 10.0**-decades:g}] gave a valid clustering")


def lambda_fallback(X, k: int, start_lambda: float = DEFAULT_START_LAMBDA, rng=None, **kwargs) -> float:
    return fit_lw_with_fallback(X, k, start_lambda, rng=rng, **kwargs)[0]


def lambda_stability_scores(
    X,
    k: int,
    grid_size: int = 20,
    runs_per_lambda: int = 10,
    rng=None,
    params: LwParams = LwParams(),
    init=InitMethod.KMEANSPP,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean ARI between fits on two random half-samples, scored on the points they share.

    Returns the lambda grid (evenly spaced over [0, 1]) and one score per grid
    value; a value where every paired fit failed scores NaN.
    """
    X = as_data_matrix(X)
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    rng = np.random.default_rng(rng)
    n = X.shape[0]
    half = max(n // 2, k)
    grid = np.linspace(0.0, 1.0, grid_size)
    scores = np.full(grid_size, np.nan)
    for g, lam in enumerate(grid):
        p = replace(params, lam=float(lam))
        vals = []
        for _ in range(runs_per_lambda):
            idx1 = np.sort(rng.choice(n, half, replace=False))
            idx2 = np.sort(rng.choice(n, half, replace=False))
            try:
                m1 = run_lw(X[idx1], k, p, init=init, rng=rng)
                m2 = run_lw(X[idx2], k, p, init=init, rng=rng)
            except ValueError:
                # too few distinct rows in a subsample
                continue
            if m1.failed or m2.failed:
                continue
            shared, pos1, pos2 = np.intersect1d(idx1, idx2, return_indices=True)
            if shared.size < 2:
                continue
            vals.append(ari(m1.labels[pos1], m2.labels[pos2]))
        if vals:
            scores[g] = float(np.mean(vals))
    return grid, scores


def lambda_stability_select(
    X,
    k: int,
    grid_size: int = 20,
    runs_per_lambda: int = 10,
    rng=None,
    params: LwParams = LwParams(),
    init=InitMethod.KMEANSPP,
    start_lambda: float = DEFAULT_START_LAMBDA,
) -> float:
    """The most stable lambda on the grid (smallest one on ties).

    Falls back to :func:`lambda_fallback` when no grid value yields a valid pair of fits.
    """
    rng = np.random.default_rng(rng)
    grid, scores = lambda_stability_scores(X, k, grid_size, runs_per_lambda, rng, params, init)
    if np.all(np.isnan(scores)):
        return lambda_fallback(X, k, start_lambda, rng=rng, params=params, init=init)
    return float(grid[int(np.nanargmax(scores))])
