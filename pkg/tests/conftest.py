import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import hardlattice as hl

settings.register_profile(
    "default",
    max_examples=150,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sample_chain_result():
    """A short equilibrated run shared by tests that only need typical states."""
    params = hl.SamplerParams(sweeps=600, burn_in=200, thin=3, seed=2024)
    return hl.run_chain(4, 1.05, 0.1, params)


@pytest.fixture(scope="session")
def sample_snapshots(sample_chain_result):
    return sample_chain_result.records


@pytest.fixture(scope="session")
def rng():
    return np.random.Generator(np.random.PCG64(99))
