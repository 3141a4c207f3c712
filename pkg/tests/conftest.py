import pytest

from roadcheck.engine import EvaluationContext
from roadcheck.models import default_profiles
from roadcheck.scenarios import generate, preset


@pytest.fixture(scope="session")
def config():
    return default_profiles()


@pytest.fixture(scope="session")
def safe_scenario():
    return generate(preset("safe"))


@pytest.fixture(scope="session")
def near_miss_scenario():
    return generate(preset("near_miss"))


@pytest.fixture(scope="session")
def collision_scenario():
    return generate(preset("collision"))


@pytest.fixture(scope="session")
def occlusion_scenario():
    return generate(preset("occlusion_abort"))


@pytest.fixture()
def safe_ctx(safe_scenario, config):
    road, _ = safe_scenario
    return EvaluationContext(road=road, config=config, profile_name="nominal")
