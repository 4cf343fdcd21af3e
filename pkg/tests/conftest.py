from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"

# criterion number -> (description, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def random_instance(rng, n_max=30, m_max=10, k_max=4):
    """Random data, a labelling with every cluster non-empty, and arbitrary centroids."""
    k = int(rng.integers(1, k_max + 1))
    n = int(rng.integers(k, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    X = rng.normal(scale=rng.uniform(0.1, 5.0), size=(n, m))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    rng.shuffle(labels)
    Z = rng.normal(size=(k, m))
    return X, labels, Z


@pytest.fixture
def iris_path():
    return DATA / "iris.csv"


@pytest.fixture
def blobs():
    """Two tight, far apart 2-D blobs plus one uniform noise column."""
    rng = np.random.default_rng(7)
    a = rng.normal([0.0, 0.0], 0.1, size=(40, 2))
    b = rng.normal([10.0, 10.0], 0.1, size=(40, 2))
    X = np.vstack([a, b])
    noise = rng.uniform(0, 10, size=(80, 1))
    truth = np.repeat([0, 1], 40)
    return np.hstack([X, noise]), truth


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        desc, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {desc}: {detail}")
