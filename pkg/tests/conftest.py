import os

import pytest
from hypothesis import HealthCheck, settings

from trichotomy.catalog import fixture
from trichotomy.scenario import parse_scenario

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def diagonal():
    return parse_scenario(fixture("diagonal"))


@pytest.fixture(scope="session")
def negative():
    return parse_scenario(fixture("negative_control"))


@pytest.fixture
def scenario():
    """Factory for catalog scenarios with optional overrides."""
    return lambda name, **over: parse_scenario(fixture(name), over or None)
