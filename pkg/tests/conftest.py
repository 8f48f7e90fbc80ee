import numpy as np
import pytest

from richards_homog.grid import build_mesh
from richards_homog.randfield import CovarianceSpec, build_kle_basis, sample_field


@pytest.fixture(scope="session")
def coarse():
    return build_mesh(8)


@pytest.fixture(scope="session")
def fine():
    return build_mesh(128)


@pytest.fixture(scope="session")
def basis():
    return build_kle_basis(CovarianceSpec(), 32, 0.95)


@pytest.fixture(scope="session")
def field42(basis, fine):
    return sample_field(basis, 42, (1000.0, 4200.0), fine)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
