import numpy as np
import pytest

from btdpp import operator, potential

GINIBRE_SPEC = {"family": "radial", "profile": [[1, 1.0]]}
ELLIPSE03_SPEC = {"family": "anisotropic_quadratic", "t": 0.3}
ELLIPSE05_SPEC = {"family": "anisotropic_quadratic", "t": 0.5}


@pytest.fixture(scope="session")
def ginibre():
    return potential.parse_potential(GINIBRE_SPEC)


@pytest.fixture(scope="session")
def ellipse03():
    return potential.parse_potential(ELLIPSE03_SPEC)


@pytest.fixture(scope="session")
def ellipse05():
    return potential.parse_potential(ELLIPSE05_SPEC)


@pytest.fixture(scope="session")
def sd_gin16(ginibre):
    return operator.spectral_projector(ginibre, 1.0, 0.5, 16)


@pytest.fixture(scope="session")
def sd_gin64(ginibre):
    return operator.spectral_projector(ginibre, 1.0, 0.5, 64)


@pytest.fixture(scope="session")
def sd_ell64(ellipse05):
    return operator.spectral_projector(ellipse05, 1.0, 0.5, 64)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
