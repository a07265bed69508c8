import numpy as np
import pytest
from hypothesis import settings

from oversetdg.hyperbolic import ScalarAdvection, SinusoidalSolution, wave_system
from oversetdg.mesh import build_mesh, sinusoid_geometry, uniform_subdomain

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")

# lines appended by tests/test_acceptance.py, echoed in the terminal summary
CRITERION_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERION_LINES):
        terminalreporter.write_line(CRITERION_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def wave():
    return wave_system()


@pytest.fixture(scope="session")
def scalar():
    return ScalarAdvection(1.0).system


@pytest.fixture(scope="session")
def sinusoid():
    return SinusoidalSolution(4.0)


@pytest.fixture(scope="session")
def pair_mesh():
    return build_mesh(0.0, 1.1, 2.0, 3.5, 1, 1)


@pytest.fixture(scope="session")
def sinusoid_mesh():
    return build_mesh(*sinusoid_geometry(0.25), 6, 6)


@pytest.fixture(scope="session")
def unit_element():
    return uniform_subdomain(-1.0, 1.0, 1)
