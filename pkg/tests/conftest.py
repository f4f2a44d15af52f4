import numpy as np
import pytest

from wsobolev.discretization import build_grid
from wsobolev.potentials import make_constant, make_power

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def harmonic():
    return make_power(2.0)


@pytest.fixture
def unit():
    return make_constant(1.0)


@pytest.fixture
def grid2():
    return build_grid(2, 6.0, 129)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
