import numpy as np
import pytest

from nhspec.corpus import random_coeffs, random_solenoidal
from nhspec.grid import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def g2():
    return make_grid(2, 32)


@pytest.fixture
def g3():
    return make_grid(3, 16)


def rand_scalar(grid, seed=0, **kw):
    return random_coeffs(grid, np.random.default_rng(seed), **kw)


def rand_vector(grid, seed=0, **kw):
    return random_solenoidal(grid, np.random.default_rng(seed), **kw)
