import numpy as np
import pytest

from mnarmc import LossContext, ObservedData


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def random_context(rng, n1, n2, density=0.5, alpha=10.0, x_scale=1.0):
    """A random partially observed instance with at least one observed entry."""
    X = x_scale * rng.standard_normal((n1, n2))
    W = rng.random((n1, n2)) < density
    if not W.any():
        W[rng.integers(n1), rng.integers(n2)] = True
    return LossContext(ObservedData(X, W), alpha)


def box_matrix(rng, n1, n2, alpha):
    """A random matrix strictly inside the entrywise alpha-box."""
    return 0.9 * alpha * (2.0 * rng.random((n1, n2)) - 1.0)
