import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bns_volume.model import REFERENCE_PARAMS, GridConstants, ModelParams

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def theta0() -> ModelParams:
    return REFERENCE_PARAMS


@pytest.fixture
def grid0() -> GridConstants:
    return GridConstants.for_params(REFERENCE_PARAMS.lam)


def random_params(rng: np.random.Generator) -> ModelParams:
    """A parameter vector drawn log-uniformly/uniformly from a plausible box."""
    return ModelParams(
        nu=float(np.exp(rng.uniform(np.log(0.5), np.log(30)))),
        alpha=float(np.exp(rng.uniform(np.log(0.2), np.log(10)))),
        lam=float(np.exp(rng.uniform(np.log(5), np.log(800)))),
        mu=float(rng.uniform(-1, 1)),
        beta=float(rng.uniform(-2, 2)),
        sigma=float(np.exp(rng.uniform(np.log(0.01), np.log(1)))),
        rho=float(rng.uniform(-0.01, 0.01)),
    )


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
