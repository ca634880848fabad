import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import landausim as ls

settings.register_profile(
    "ci", deadline=None, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


@pytest.fixture(scope="session")
def aniso():
    """Anisotropic Gaussian preset used across functional tests."""
    return ls.aniso_gauss(2.0, 0.5, 0.5)


@pytest.fixture(scope="session")
def aniso_pair(aniso):
    return ls.TensorPower(aniso, 2)


@pytest.fixture(scope="session")
def pot_gm2():
    """gamma=-2 regularized potential, eta=0.1 (matches frozen oracles)."""
    return ls.PotentialSpec(gamma=-2.0, eta=0.1)


@pytest.fixture(scope="session")
def pot_gm3():
    """gamma=-3 regularized potential, eta=0.2 (matches frozen oracles)."""
    return ls.PotentialSpec(gamma=-3.0, eta=0.2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260814)
