import pytest

from omsense.config import ConfigBundle, default_config


@pytest.fixture(scope="session")
def shot_bundle():
    """Profile with an imprecision-dominated joint minimum at 50 uW."""
    return ConfigBundle(default_config("shot"))


@pytest.fixture(scope="session")
def thermal_bundle():
    """Profile with a thermal-dominated joint minimum at 50 uW."""
    return ConfigBundle(default_config("thermal"))
