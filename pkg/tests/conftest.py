import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hardy_lab.core import TruncationConfig

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def cfg8():
    return TruncationConfig(degree=8, guard=2)


@pytest.fixture
def cfg64():
    return TruncationConfig(degree=64, guard=16)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
