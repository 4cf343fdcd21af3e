import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sharkmeans.lloyd import (
    EmptyClusterError,
    InitMethod,
    assign,
    init_kmeanspp,
    init_uniform,
    kmeans_objective,
    run_kmeans,
    update_centroids,
)
from sharkmeans.metrics import ari

FOUR = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])


def brute_force_labels(X, Z, w):
    out = []
    for x in X:
        d = [sum(w[v] * (x[v] - z[v]) ** 2 for v in range(len(x))) for z in Z]
        out.append(min(range(len(Z)), key=lambda t: (d[t], t)))
    return np.array(out)


def test_init_uniform_permutation_when_k_equals_n():
    Z = init_uniform(FOUR, 4, rng=3)
    assert sorted(map(tuple, Z)) == sorted(map(tuple, FOUR))


def test_init_uniform_single_and_deterministic():
    Z = init_uniform(FOUR, 1, rng=1)
    assert any(np.array_equal(Z[0], x) for x in FOUR)
    np.testing.assert_array_equal(init_uniform(FOUR, 3, rng=11), init_uniform(FOUR, 3, rng=11))


def test_init_uniform_skips_duplicates_and_rejects_too_few():
    X = np.array([[1.0, 1.0]] * 5 + [[2.0, 2.0]])
    for seed in range(20):
        Z = init_uniform(X, 2, rng=seed)
        assert len({tuple(z) for z in Z}) == 2
    with pytest.raises(ValueError):
        init_uniform(X, 3, rng=0)


def test_kmeanspp_duplicated_groups():
    X = np.array([[0.0, 0.0]] * 5 + [[100.0, 100.0]] * 5)
    for seed in range(30):
        Z = init_kmeanspp(X, 2, rng=seed)
        assert {tuple(z) for z in Z} == {(0.0, 0.0), (100.0, 100.0)}


def test_kmeanspp_basics():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    Z = init_kmeanspp(X, 1, rng=5)
    assert any(np.array_equal(Z[0], x) for x in X)
    np.testing.assert_array_equal(init_kmeanspp(X, 4, rng=9), init_kmeanspp(X, 4, rng=9))
    with pytest.raises(ValueError):
        init_kmeanspp(X, 31, rng=0)


def test_assign_examples():
    Z = np.array([[0.0, 0.5], [10.0, 0.5]])
    np.testing.assert_array_equal(assign(FOUR, Z), brute_force_labels(FOUR, Z, [0.5, 0.5]))
    np.testing.assert_array_equal(assign(FOUR, Z), [0, 0, 1, 1])
    Z3 = np.array([[5.0, 5.0], [1.0, 1.0], [10.0, 1.0]])
    assert assign([[10.0, 1.0]], Z3)[0] == 2


@pytest.mark.parametrize("seed", range(25))
def test_tie_break_smallest_index(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    # small integers keep every difference and square exact
    x = rng.integers(-50, 50, size=m).astype(float)
    offset = rng.integers(-20, 21, size=m).astype(float)
    offset[0] = rng.integers(1, 20)
    k = int(rng.integers(2, 6))
    # reflections of x +/- offset are exactly equidistant from x
    Z = np.array([x + offset if t % 2 else x - offset for t in range(k)])
    Z = np.vstack([Z, x + 3 * offset + 1.0])
    assert assign(x[None, :], Z)[0] == 0
    # an equidistant pair placed after a farther centroid
    Z2 = np.vstack([x + 5 * offset + 1.0, x + offset, x - offset])
    assert assign(x[None, :], Z2)[0] == 1


def test_tie_break_midpoint():
    assert assign([[0.5]], [[0.0], [1.0]])[0] == 0
    assert assign([[0.5, 0.5]], [[1.0, 0.5], [0.0, 0.5], [0.5, 1.0]])[0] == 0


def test_update_centroids_examples():
    np.testing.assert_array_equal(update_centroids(FOUR, [0, 1, 2, 3], 4), FOUR)
    np.testing.assert_allclose(update_centroids([[0.0, 0.0], [2.0, 2.0]], [0, 0], 1), [[1.0, 1.0]])
    np.testing.assert_allclose(update_centroids(FOUR, [0, 0, 1, 1], 2), [[0.0, 0.5], [10.0, 0.5]])
    with pytest.raises(EmptyClusterError) as info:
        update_centroids(FOUR, [0, 0, 2, 2], 3)
    assert info.value.cluster == 1


def test_kmeans_objective_examples():
    assert kmeans_objective(FOUR, [0, 1, 2, 3], FOUR) == 0.0
    assert kmeans_objective([[0.0], [2.0]], [0, 0], [[1.0]]) == 2.0


def test_run_kmeans_single_cluster():
    X = np.array([[1.0], [2.0], [4.0], [9.0]])
    model = run_kmeans(X, 1, rng=0)
    np.testing.assert_allclose(model.centroids, [[4.0]])
    assert model.objective == pytest.approx(X.var() * 4)
    assert model.converged and not model.failed


def test_run_kmeans_separated_blobs():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(0, 0.1, (30, 2)), rng.normal(20, 0.1, (30, 2))])
    truth = np.repeat([0, 1], 30)
    for init in InitMethod:
        model = run_kmeans(X, 2, init=init, rng=4)
        assert ari(model.labels, truth) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_lloyd_monotone_and_fixed_point(seed):
    rng = np.random.default_rng(seed)
    n, m, k = int(rng.integers(10, 80)), int(rng.integers(1, 6)), int(rng.integers(1, 6))
    X = rng.normal(size=(n, m)) * rng.uniform(0.1, 3, size=m)
    model = run_kmeans(X, k, init=InitMethod.UNIFORM, rng=seed)
    if model.failed:
        return
    h = np.array(model.history)
    assert np.all(np.diff(h) <= 1e-9)
    if model.converged:
        relabel = assign(X, model.centroids)
        np.testing.assert_array_equal(relabel, model.labels)
        again = assign(X, update_centroids(X, relabel, k))
        np.testing.assert_array_equal(again, relabel)


def test_determinism():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 3))
    a, b = run_kmeans(X, 3, rng=12), run_kmeans(X, 3, rng=12)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert a.objective == b.objective and a.history == b.history


def test_empty_cluster_marks_failure():
    X = np.array([[0.0], [0.1], [0.2], [10.0]])
    # the duplicate centroid 1 never wins a tie against centroid 0
    model = run_kmeans(X, 3, init=np.array([[0.0], [0.0], [10.0]]))
    assert model.failed and not model.converged
    assert np.isinf(model.objective)
