"""End-to-end acceptance criteria.

Each test records a one-line verdict in ``conftest.ACCEPTANCE``; the verdicts are
printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, random_instance
from test_metrics import pair_counting_ari
from sharkmeans.harness import DatasetSpec, ExperimentConfig, run_experiment, run_rng
from sharkmeans.lloyd import assign, init_uniform, kmeans_objective, run_kmeans
from sharkmeans.metrics import ari, best_of_runs, mean_relative_rank, RunRecord
from sharkmeans.shark import (
    comparable_kmeans_objective,
    first_iteration_objectives,
    gap_report,
    run_shark,
    shapley_closed_form,
    shapley_exact_oracle,
    shark_objective,
)
from sharkmeans.synth import SynthConfig, make_dataset
from sharkmeans.core import range_normalize


def record(num, desc, ok, detail):
    ACCEPTANCE[num] = (desc, bool(ok), detail)
    return ok


@pytest.fixture(scope="module")
def oracle_instances():
    rng = np.random.default_rng(20240101)
    return [random_instance(rng, n_max=30, m_max=10, k_max=4) for _ in range(200)]


@pytest.fixture(scope="module")
def phi_vectors():
    rng = np.random.default_rng(314)
    out = []
    while len(out) < 10_000:
        m = int(rng.integers(2, 51))
        phi = rng.uniform(0.0, 1.0, m) ** 3 * 10.0 ** rng.uniform(-3, 3)
        if np.all(phi > 0) and np.ptp(phi) > 0:
            out.append(phi)
    return out


def test_criterion_1_oracle_equivalence(oracle_instances):
    t0 = time.perf_counter()
    worst = 0.0
    for X, labels, Z in oracle_instances:
        diff = np.abs(shapley_exact_oracle(X, labels, Z) - shapley_closed_form(X, labels, Z))
        worst = max(worst, float(diff.max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 30
    record(1, "closed-form Shapley equals exact enumeration", ok, f"max abs diff {worst:.2e}, {elapsed:.1f}s for 200 instances")
    assert ok


def test_criterion_2_efficiency(oracle_instances):
    worst = 0.0
    for X, labels, Z in oracle_instances:
        cost = kmeans_objective(X, labels, Z)
        total = shapley_closed_form(X, labels, Z).sum()
        worst = max(worst, abs(total - cost) / max(cost, 1e-300))
    ok = worst <= 1e-9
    record(2, "sum of Shapley values equals k-means cost", ok, f"max rel diff {worst:.2e}")
    assert ok


def test_criterion_3_am_hm(phi_vectors):
    strict = sum(shark_objective(p) < comparable_kmeans_objective(p) for p in phi_vectors)
    rng = np.random.default_rng(2)
    eq_worst = 0.0
    for _ in range(1000):
        p = np.full(int(rng.integers(2, 51)), 10.0 ** rng.uniform(-3, 3))
        hm, am = shark_objective(p), comparable_kmeans_objective(p)
        eq_worst = max(eq_worst, abs(hm - am) / am)
    ok = strict == len(phi_vectors) and eq_worst <= 1e-12
    record(3, "harmonic < arithmetic mean of Shapley values", ok, f"{strict}/{len(phi_vectors)} strict, equal-entry rel diff {eq_worst:.1e}")
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="(max-min)^2/(2(max+min)) bounds AM-HM only for two entries; e.g. (1, 1, 2) gives 2/15 < 1/6",
)
def test_criterion_4_gap_bound(phi_vectors):
    held = sum(gap_report(p).epsilon >= gap_report(p).lower_bound - 1e-9 for p in phi_vectors)
    rng = np.random.default_rng(4)
    grows = True
    for p in phi_vectors[:2000]:
        extra = p.max() * rng.uniform(1.01, 3) if rng.random() < 0.5 else p.min() * rng.uniform(0.1, 0.99)
        grows &= gap_report(np.append(p, extra)).lower_bound > gap_report(p).lower_bound
    g = gap_report([1.0, 3.0])
    two = abs(g.epsilon - 0.5) <= 1e-12 and abs(g.lower_bound - 0.5) <= 1e-12
    ok = held == len(phi_vectors) and grows and two
    record(
        4,
        "range lower bound on the AM-HM gap",
        ok,
        f"bound held on {held}/{len(phi_vectors)}; out-of-range append grows bound: {bool(grows)}; (1,3) equality: {two}",
    )
    assert ok


def test_criterion_5_ari_oracle():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 51))
        a = rng.integers(0, int(rng.integers(1, 7)), n)
        b = rng.integers(0, int(rng.integers(1, 7)), n)
        worst = max(worst, abs(ari(a, b) - pair_counting_ari(list(a), list(b))))
    example = abs(ari([0, 0, 1, 1], [0, 0, 1, 2]) - 4 / 7)
    ok = worst <= 1e-12 and example <= 1e-12
    record(5, "contingency ARI equals pair-counting oracle", ok, f"max diff {worst:.1e} over 500 pairs, 4/7 example diff {example:.1e}")
    assert ok


def _tie_fixture(rng):
    """Integer data with centroids placed symmetrically around some points."""
    m = int(rng.integers(1, 5))
    X = rng.integers(-5, 6, size=(20, m)).astype(float)
    shift = rng.integers(1, 4, size=m).astype(float)
    i = int(rng.integers(20))
    Z = np.vstack([X[i] + shift, X[i] - shift, X[i] + 3 * shift + 1])
    return X, Z, i


def test_criterion_6_lloyd_monotone_and_ties():
    rng = np.random.default_rng(6)
    violations = 0
    for t in range(100):
        n, m, k = int(rng.integers(20, 200)), int(rng.integers(1, 8)), int(rng.integers(2, 6))
        X = rng.normal(size=(n, m)) * rng.uniform(0.2, 3, m)
        model = run_kmeans(X, k, rng=t)
        h = np.asarray(model.history)
        violations += int(np.any(np.diff(h) > 1e-12 * max(1.0, h[0])))
    tie_fail = 0
    for _ in range(200):
        X, Z, i = _tie_fixture(rng)
        tie_fail += int(assign(X[i : i + 1], Z, np.full(X.shape[1], 1.0 / X.shape[1]))[0] != 0)
        tie_fail += int(assign(X[i : i + 1], Z[[1, 0, 2]], np.full(X.shape[1], 1.0 / X.shape[1]))[0] != 0)
    ok = violations == 0 and tie_fail == 0
    record(6, "Lloyd cost non-increasing, ties to smallest index", ok, f"{violations}/100 fits increased, {tie_fail}/400 ties misassigned")
    assert ok


def test_criterion_7_first_iteration_dominance():
    rng = np.random.default_rng(7)
    strict = 0
    for t in range(100):
        n, m, k = int(rng.integers(30, 150)), int(rng.integers(2, 10)), int(rng.integers(2, 6))
        X = rng.normal(size=(n, m)) * rng.uniform(0.1, 5, m)
        Z0 = init_uniform(X, k, rng=t)
        shark, km = first_iteration_objectives(X, Z0)
        strict += int(shark < km)
    ok = strict == 100
    record(7, "SHARK below comparable k-means after one iteration", ok, f"strict on {strict}/100 instances")
    assert ok


# desk-scale statistical reproduction

GRID = ("1000x10-3k", "1000x10-3k+5NF", "2000x20-10k", "2000x20-10k+10NF")
NOISY = ("1000x10-3k+5NF", "2000x20-10k+10NF")


@pytest.fixture(scope="module")
def desk_grid():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(datasets=[DatasetSpec.parse(name, count=10) for name in GRID], runs=25, base_seed=0)
    report = run_experiment(cfg)
    report.provenance["elapsed"] = time.perf_counter() - t0
    return report


def _row_summary(report, dataset):
    return ", ".join(f"{a} {report.row(dataset, a).mean_ari:.3f}" for a in report.algorithms)


@pytest.mark.slow
def test_criterion_8_noisy_synthetic(desk_grid):
    shark = desk_grid.row("1000x10-3k+5NF", "shark").mean_ari
    km = desk_grid.row("1000x10-3k+5NF", "kmeans_pp").mean_ari
    ok = shark >= 0.80 and km <= 0.55 and shark - km >= 0.25
    record(8, "noisy 1000x10-3k+5NF: SHARK >= 0.80, k-means++ <= 0.55", ok, f"SHARK {shark:.3f}, k-means++ {km:.3f}")
    assert ok


@pytest.mark.slow
def test_criterion_9_clean_synthetic(desk_grid):
    shark = desk_grid.row("1000x10-3k", "shark").mean_ari
    km = desk_grid.row("1000x10-3k", "kmeans_pp").mean_ari
    ok = abs(shark - km) <= 0.08 and min(shark, km) >= 0.78
    record(9, "clean 1000x10-3k: SHARK within 0.08 of k-means++, both >= 0.78", ok, f"SHARK {shark:.3f}, k-means++ {km:.3f}")
    assert ok


@pytest.mark.slow
def test_criterion_10_noise_weight_suppression():
    suppressed, ratios = 0, []
    for seed in range(20):
        ds = make_dataset(SynthConfig(2000, 20, 10, noise_fraction=0.5, seed=seed))
        X = range_normalize(ds.X)
        models = [run_shark(X, 10, rng=run_rng(0, i, "shark")) for i in range(25)]
        recs = [RunRecord("shark", ds.name, i, 0.0, m.objective, m.failed) for i, m in enumerate(models)]
        best = models[best_of_runs(recs).seed]
        noise = best.weights[~ds.informative_mask].mean()
        info = best.weights[ds.informative_mask].mean()
        ratios.append(noise / info)
        suppressed += int(noise < 0.5 * info)
    ok = suppressed >= 18
    record(
        10,
        "noise weights < 0.5x informative on 2000x20-10k+10NF",
        ok,
        f"{suppressed}/20 datasets, median noise/informative ratio {np.median(ratios):.3f}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_11_iris(iris_path):
    cfg = ExperimentConfig(datasets=[DatasetSpec(path=str(iris_path))], algorithms=["shark", "fwsa"], runs=25)
    report = run_experiment(cfg)
    shark = report.row("iris", "shark").mean_ari
    fwsa = report.row("iris", "fwsa").mean_ari
    ok = abs(shark - 0.886) <= 0.05 and abs(fwsa - 0.886) <= 0.05
    record(11, "Iris best-of-25: SHARK and FWSA at 0.886 +- 0.05", ok, f"SHARK {shark:.3f} (range), FWSA {fwsa:.3f} (z-score)")
    assert ok


@pytest.mark.slow
def test_criterion_12_mean_relative_rank(desk_grid):
    table = {d: {a: desk_grid.row(d, a).mean_ari for a in desk_grid.algorithms} for d in NOISY}
    ranks = mean_relative_rank(table)
    ok = all(ranks["shark"] <= r for r in ranks.values())
    detail = ", ".join(f"{a} {r:.2f}" for a, r in ranks.items())
    detail += f"; grid took {desk_grid.provenance['elapsed']:.0f}s; " + "; ".join(
        f"{d}: {_row_summary(desk_grid, d)}" for d in GRID
    )
    record(12, "SHARK has the best mean relative rank on noisy configs", ok, detail)
    assert ok
