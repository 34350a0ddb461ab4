import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from jmgt.dynamics import Params
from jmgt.spectral import GridSpec

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def p():
    return Params()


@pytest.fixture
def grid8():
    return GridSpec(3, 8, 2 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
