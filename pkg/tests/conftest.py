import numpy as np
import pytest

from drumcert.geometry import build_domain, build_quadrature


@pytest.fixture(scope="session")
def disk():
    return build_domain("disk")


@pytest.fixture(scope="session")
def smooth3():
    return build_domain("smooth3")


@pytest.fixture(scope="session")
def smooth3s():
    return build_domain("smooth3s")


@pytest.fixture(scope="session")
def disk_q256(disk):
    return build_quadrature(disk, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
