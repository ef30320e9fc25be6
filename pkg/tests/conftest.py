import numpy as np
import pytest

from avgmargin.core import Dataset


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[key])


@pytest.fixture
def two_points():
    return Dataset(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]))


def random_dataset(rng, n, d, balanced=True):
    X = rng.standard_normal((n, d))
    if balanced:
        y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    else:
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        y[0], y[1] = 1.0, -1.0
    X += 0.7 * y[:, None] * rng.standard_normal(d)[None, :]
    return Dataset(X, y)
