import numpy as np
import pytest

from loggas.kernel import Domain, torus_log_kernel
from loggas.measure import uniform_measure


@pytest.fixture
def torus1():
    return Domain("torus", 1)


@pytest.fixture
def torus2():
    return Domain("torus", 2)


@pytest.fixture
def kernel1(torus1):
    return torus_log_kernel(1, 64)


@pytest.fixture
def kernel2(torus2):
    return torus_log_kernel(2, 64)


@pytest.fixture
def uniform2(torus2):
    return uniform_measure(torus2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
