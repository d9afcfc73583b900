import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ksbesov.spectral import GridSpec, band_limited_noise

settings.register_profile(
    "ksbesov", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ksbesov")


@pytest.fixture
def grid():
    return GridSpec(10.0, 64)


@pytest.fixture
def noise(grid):
    return band_limited_noise(grid, 7)


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
