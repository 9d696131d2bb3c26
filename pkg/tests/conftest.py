import numpy as np
import pytest

from climfact.grid import build_domain


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)


@pytest.fixture
def small_domain():
    """3x3 all-valid grid with nontrivial latitude weighting."""
    return build_domain((40.0, 43.0, 5.0, 8.0), 1.0)


def brute_force_inner(domain, f_values, g_values):
    """Independent double-loop evaluation of the weighted inner product."""
    total = 0.0
    for i in range(domain.n_lat):
        for j in range(domain.n_lon):
            if domain.mask[i, j]:
                total += domain.weights[i, j] * f_values[i, j] * g_values[i, j]
    return total
