import numpy as np
import pytest

from conformal_ridge import Dataset


def random_instance(rng, n, p, scale=1.0):
    """Training set of n - 1 observations plus a test object."""
    X = rng.standard_normal((n, p)) * scale
    w = rng.standard_normal(p)
    y = X @ w + rng.standard_normal(n)
    return Dataset(X[:-1], y[:-1]), X[-1], y[-1]


@pytest.fixture
def rng():
    return np.random.default_rng(20140917)


@pytest.fixture
def toy():
    """The single-observation example: train {(1, 0)}, test object 1."""
    return Dataset([[1.0]], [0.0]), np.array([1.0])


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
