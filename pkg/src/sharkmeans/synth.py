"""Gaussian-mixture benchmark datasets with optional uniform noise features."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np

DEFAULT_MIN_CLUSTER_SIZE = 20

# (n, m, k) shapes of the benchmark grid
BENCHMARK_GRID = [
    (1000, 10, 3), (1000, 10, 5), (1000, 10, 10),
    (2000, 20, 5), (2000, 20, 10), (2000, 20, 20),
    (2000, 30, 5), (2000, 30, 10), (2000, 30, 20),
    (5000, 50, 10), (5000, 50, 20), (5000, 50, 50),
]


def noise_feature_count(m: int, fraction: float) -> int:
    # round half up; Python's round() is banker's rounding
    return int(np.floor(fraction * m + 0.5))


@dataclass(frozen=True)
class SynthConfig:
    n: int
    m: int
    k: int
    noise_fraction: float = 0.0
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.k < 1:
            raise ValueError("n, m and k must be positive")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ValueError("noise_fraction must lie in [0, 1]")
        if self.n < self.k * self.min_cluster_size:
            raise ValueError(
                f"n={self.n} cannot hold {self.k} clusters of at least {self.min_cluster_size} points"
            )

    @property
    def n_noise(self) -> int:
        return noise_feature_count(self.m, self.noise_fraction)

    @property
    def name(self) -> str:
        base = f"{self.n}x{self.m}-{self.k}k"
        return f"{base}+{self.n_noise}NF" if self.n_noise else base

    def with_seed(self, seed: int) -> "SynthConfig":
        return replace(self, seed=seed)


_NAME_RE = re.compile(r"^(\d+)x(\d+)-(\d+)k?(?:\+(\d+)NF)?$")


def parse_config_name(name: str, seed: int = 0) -> SynthConfig:
    """Parse ``"2000x30-5k+15NF"`` style names (the ``k`` suffix is optional)."""
    match = _NAME_RE.match(name.strip())
    if not match:
        raise ValueError(f"not a synthetic configuration name: {name!r}")
    n, m, k, nf = match.groups()
    n, m, k = int(n), int(m), int(k)
    frac = int(nf) / m if nf else 0.0
    cfg = SynthConfig(n=n, m=m, k=k, noise_fraction=frac, seed=seed)
    if nf and cfg.n_noise != int(nf):
        raise ValueError(f"{name!r}: {nf} noise features cannot be expressed as a fraction of m={m}")
    return cfg


@dataclass
class LabeledDataset:
    X: np.ndarray
    truth: np.ndarray
    informative_mask: np.ndarray
    name: str = ""

    @property
    def k(self) -> int:
        return int(self.truth.max()) + 1


def cluster_sizes(n: int, k: int, min_size: int, rng: np.random.Generator) -> np.ndarray:
    """Random cluster sizes summing to ``n``, each at least ``min_size``.

    Every cluster starts with ``min_size`` points; each remaining point then joins
    a cluster chosen uniformly at random (a multinomial draw).
    """
    if n < k * min_size:
        raise ValueError(f"cannot split {n} points into {k} clusters of at least {min_size}")
    return min_size + rng.multinomial(n - k * min_size, np.full(k, 1.0 / k))


def generate_mixture(cfg: SynthConfig) -> LabeledDataset:
    """Isotropic Gaussian clusters without noise features.

    Centroids are drawn from N(0, I); each cluster gets one variance from
    U(0.5, 1.5) shared by all its dimensions. Rows are shuffled.
    """
    mix_seed, _ = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(mix_seed)
    centroids = rng.standard_normal((cfg.k, cfg.m))
    variances = rng.uniform(0.5, 1.5, size=cfg.k)
    sizes = cluster_sizes(cfg.n, cfg.k, cfg.min_cluster_size, rng)
    truth = np.repeat(np.arange(cfg.k), sizes)
    X = centroids[truth] + rng.standard_normal((cfg.n, cfg.m)) * np.sqrt(variances)[truth, None]
    order = rng.permutation(cfg.n)
    return LabeledDataset(
        X=X[order],
        truth=truth[order],
        informative_mask=np.ones(cfg.m, dtype=bool),
        name=replace(cfg, noise_fraction=0.0).name,
    )


def inject_noise(ds: LabeledDataset, noise_fraction: float, rng=None) -> LabeledDataset:
    """Append ``round(noise_fraction * m)`` columns of i.i.d. U(0, 1) noise."""
    if noise_fraction < 0:
        raise ValueError("noise_fraction must be >= 0")
    m = int(ds.informative_mask.sum())
    extra = noise_feature_count(m, noise_fraction)
    if extra == 0:
        return ds
    rng = np.random.default_rng(rng)
    noise = rng.uniform(0.0, 1.0, size=(ds.X.shape[0], extra))
    return LabeledDataset(
        X=np.hstack([ds.X, noise]),
        truth=ds.truth.copy(),
        informative_mask=np.concatenate([ds.informative_mask, np.zeros(extra, dtype=bool)]),
        name=f"{ds.name}+{extra}NF",
    )


def make_dataset(cfg: SynthConfig) -> LabeledDataset:
    """Mixture plus the configured noise features.

    The noise draws come from an independent child stream of ``cfg.seed``, so the
    clean and noisy versions of a seed share their informative columns.
    """
    ds = generate_mixture(cfg)
    _, noise_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    return inject_noise(ds, cfg.noise_fraction, np.random.default_rng(noise_seed))


def benchmark_grid(noisy: bool, noise_fraction: float = 0.5) -> list[SynthConfig]:
    frac = noise_fraction if noisy else 0.0
    return [SynthConfig(n=n, m=m, k=k, noise_fraction=frac) for n, m, k in BENCHMARK_GRID]
