import pytest

from qbackflow.eigen import max_probability
from qbackflow.grid import build_grid


@pytest.fixture(scope="session")
def grid_1500():
    return build_grid(1500, 30.0)


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(400, 12.0)


@pytest.fixture(scope="session")
def optimal_free(grid_1500):
    return max_probability(0.0, grid_1500)


@pytest.fixture(scope="session")
def optimal_small(small_grid):
    return {a: max_probability(a, small_grid) for a in (0.0, 0.1, 0.5, 1.0)}


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
