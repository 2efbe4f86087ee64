import numpy as np
import pytest

from nvscatter.grids import make_grid, sample_potential
from nvscatter.greens import build_greens_table


@pytest.fixture(scope="session")
def grid64():
    return make_grid(8.0, 64)


@pytest.fixture(scope="session")
def gauss64(grid64):
    return sample_potential(grid64, "gaussian", {"A": 0.5, "sigma": 1.0})


@pytest.fixture(scope="session")
def table64(grid64):
    """Memoizing factory: greens table at N=64 for a given lambda."""
    cache = {}

    def factory(lam, **opts):
        key = (complex(lam), tuple(sorted(opts.items())))
        if key not in cache:
            cache[key] = build_greens_table(grid64, lam, **opts)
        return cache[key]

    return factory
