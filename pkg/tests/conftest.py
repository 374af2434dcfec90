import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from carleman.fourier_field import FourierField1D, QuasiPeriodicField
from carleman.kuramoto import reduced_field

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def sin2x():
    return FourierField1D({2: -0.5j, -2: 0.5j})


@pytest.fixture
def kuramoto_field():
    return reduced_field(1.0, 1.0)


@pytest.fixture
def two_freq_field():
    """0.5 + 0.3 sin x + 0.2 sin(sqrt(2) x) on R with tau = (1, sqrt 2)."""
    coeffs = {
        (0, (0, 0)): 0.5,
        (0, (1, 0)): -0.15j,
        (0, (-1, 0)): 0.15j,
        (0, (0, 1)): -0.1j,
        (0, (0, -1)): 0.1j,
    }
    return QuasiPeriodicField(1, (1.0, np.sqrt(2.0)), coeffs)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        passed, detail = RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'} | {detail}")
