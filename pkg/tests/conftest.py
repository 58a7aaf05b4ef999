import numpy as np
import pytest

from doublephase.eigen import principal_eigenpair
from doublephase.mesh import build_mesh


@pytest.fixture(scope="session")
def mesh31():
    return build_mesh(1, 31)


@pytest.fixture(scope="session")
def eig31_q2(mesh31):
    return principal_eigenpair(mesh31, 2.0)


@pytest.fixture(scope="session")
def eig31_q4(mesh31):
    return principal_eigenpair(mesh31, 4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
