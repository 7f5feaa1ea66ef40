import numpy as np
import pytest
from fractions import Fraction

from carnot import catalog
from carnot.algebra import AlgebraVector


def rational_vector(algebra, rng, num_bound=5, den_bound=4):
    coords = [Fraction(int(rng.integers(-num_bound, num_bound + 1)),
                       int(rng.integers(1, den_bound))) for _ in range(algebra.dim)]
    return AlgebraVector(algebra, coords)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def h1():
    return catalog.get("h1")


@pytest.fixture(scope="session")
def h2():
    return catalog.get("h2")


@pytest.fixture(scope="session")
def h12():
    return catalog.get("h12")


@pytest.fixture(scope="session")
def g42():
    return catalog.get("g42")


@pytest.fixture(scope="session")
def f23():
    return catalog.get("free_2_3")
