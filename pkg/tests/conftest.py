import pytest

from mdsrepair.gf import build_tower
from mdsrepair.nrc import build, validate_params


@pytest.fixture(scope="session")
def tower3():
    return build_tower(3, 1, 2)


@pytest.fixture(scope="session")
def tower5():
    return build_tower(5, 1, 2)


@pytest.fixture(scope="session")
def bundle3(tower3):
    return build(validate_params(tower3, 2, 9))


@pytest.fixture(scope="session")
def bundle5(tower5):
    return build(validate_params(tower5, 3, 24))
