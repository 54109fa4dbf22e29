import pytest

from delaycir.model import EXAMPLE_1, EXAMPLE_2, InitialHistory
from delaycir.schemes import ControlConfig

ACCEPTANCE_LINES = []


@pytest.fixture
def ex1():
    return EXAMPLE_1


@pytest.fixture
def ex2():
    return EXAMPLE_2


@pytest.fixture
def ctrl1():
    return ControlConfig(c0=10.0, c2=1.0, epsilon=1e-3)


@pytest.fixture
def ctrl2():
    return ControlConfig(c0=200.0, c2=5.0, epsilon=1e-3)


@pytest.fixture
def xi_one():
    return InitialHistory.constant(1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
