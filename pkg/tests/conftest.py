import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def il1():
    from vibronix.presets import il1_params
    return il1_params()


@pytest.fixture
def il1_model():
    from vibronix.presets import il1_temperature_model
    return il1_temperature_model()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
