import numpy as np
import pytest

from momentpoly.orbit import OrbitProblem


@pytest.fixture
def horn2():
    return OrbitProblem([[1, 0], [1, 0]])


@pytest.fixture
def horn3():
    return OrbitProblem([[2, 1, 0], [2, 1, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
