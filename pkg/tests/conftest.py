import os

import pytest
from hypothesis import HealthCheck, settings

from sponge_spectra.scenes import load_scene

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = ["baranski-planar", "fraser-jurga", "self-similar", "LG", "bedford-mcmullen"]


@pytest.fixture(scope="session")
def scenes():
    return {name: load_scene(name) for name in FIXTURES}


@pytest.fixture(scope="session")
def carpet(scenes):
    return scenes["baranski-planar"].ifs
