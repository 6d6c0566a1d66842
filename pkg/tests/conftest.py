import os

import pytest
from hypothesis import HealthCheck, settings

from maserlab.core import table_one

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def op_point():
    """Representative operating point: eta=0.1, delta=0, S_z0=0.2, n_bath=5."""
    return table_one()
