import math

import numpy as np
import pytest

from ivem import CircleInterface, CoefficientPair, build_uniform_mesh, cut_mesh

CENTER = (0.5 + 0.01 * math.sqrt(2.0), 0.5 + 0.01 * math.sqrt(3.0))
RADIUS = 0.3

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def circle():
    return CircleInterface(CENTER, RADIUS)


@pytest.fixture
def coef():
    return CoefficientPair(beta_plus=10.0, beta_minus=1.0, alpha_plus=2.0, alpha_minus=1.0)


@pytest.fixture
def imesh8(circle):
    return cut_mesh(build_uniform_mesh(n=8), circle)


@pytest.fixture
def imesh16(circle):
    return cut_mesh(build_uniform_mesh(n=16), circle)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
