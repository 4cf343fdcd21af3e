"""Cluster recovery scoring and benchmark aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata


@dataclass
class RunRecord:
    algorithm: str
    dataset: str
    seed: int
    ari: float
    objective: float
    failed: bool
    wall_time: float = 0.0
    iterations: int = 0
    lam: float | None = None


@dataclass
class AggregateResult:
    dataset: str
    algorithm: str
    mean_ari: float
    std_ari: float
    per_algorithm_rank: float
    n_runs: int
    n_failures: int
    n_datasets: int = 1
    run_mean_ari: float = float("nan")
    run_std_ari: float = float("nan")


class AllRunsFailedError(RuntimeError):
    pass


def _pairs(x: np.ndarray) -> float:
    return float((x * (x - 1) / 2.0).sum())


def contingency_table(a, b) -> np.ndarray:
    _, ia = np.unique(np.asarray(a), return_inverse=True)
    _, ib = np.unique(np.asarray(b), return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def ari(a, b) -> float:
    """Adjusted Rand index (Hubert and Arabie) from the contingency table.

    When the chance-corrected denominator vanishes the result is 1.0 for
    identical partitions and 0.0 otherwise.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    n = a.size
    if n == 0:
        raise ValueError("empty labelings")
    table = contingency_table(a, b)
    index = _pairs(table)
    sum_a = _pairs(table.sum(axis=1))
    sum_b = _pairs(table.sum(axis=0))
    total = n * (n - 1) / 2.0
    expected = sum_a * sum_b / total if total else 0.0
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        same = table.shape[0] == table.shape[1] and np.count_nonzero(table) == table.shape[0]
        return 1.0 if same else 0.0
    return float((index - expected) / (max_index - expected))


def best_of_runs(records: Sequence[RunRecord]) -> RunRecord:
    """The non-failed record with the lowest objective (first one on ties)."""
    ok = [r for r in records if not r.failed]
    if not ok:
        raise AllRunsFailedError(f"all {len(records)} runs failed")
    return min(ok, key=lambda r: r.objective)


def mean_relative_rank(table: Mapping[str, Mapping[str, float]]) -> dict[str, float]:
    """Average per-configuration rank of each algorithm (rank 1 = highest ARI).

    ``table`` maps configuration -> algorithm -> mean ARI. Exact ties share the
    average of the ranks they span.
    """
    if not table:
        return {}
    algos = list(next(iter(table.values())).keys())
    ranks = {a: [] for a in algos}
    for config, row in table.items():
        if set(row) != set(algos):
            raise ValueError(f"configuration {config!r} does not score every algorithm")
        scores = np.array([row[a] for a in algos], dtype=np.float64)
        if not np.all(np.isfinite(scores)):
            raise ValueError(f"configuration {config!r} has a missing score")
        for a, r in zip(algos, rankdata(-scores, method="average")):
            ranks[a].append(float(r))
    return {a: float(np.mean(r)) for a, r in ranks.items()}
