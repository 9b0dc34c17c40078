import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from phlab.grid import make_grid

settings.register_profile("phlab", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("phlab")


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(16, 2 * math.pi, 129, 20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
