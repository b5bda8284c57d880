import numpy as np
import pytest
from hypothesis import settings

from nctails.verify import ScenarioRun, bundled_scenario

settings.register_profile("nctails", deadline=None, max_examples=60)
settings.load_profile("nctails")

STANDARD = ("commutative", "oneblock16", "mixed")


@pytest.fixture(scope="session")
def standard_runs():
    """Lazily sampled runs of the bundled scenarios, shared by all tests."""
    return {name: ScenarioRun(bundled_scenario(name)) for name in STANDARD}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
