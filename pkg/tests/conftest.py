import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dtn_incentive import scenarios
from dtn_incentive.model import CostParams, RelayProfile, RelaySet

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def synthetic():
    return scenarios.synthetic_exponential()


@pytest.fixture
def costs():
    return CostParams(c_r=0.04, c_s=0.01, c_d=0.4)


def make_relays(lam, mu):
    return RelaySet(RelayProfile(f"r{i + 1}", a, b) for i, (a, b) in enumerate(zip(lam, mu)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
