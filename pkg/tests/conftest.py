import numpy as np
import pytest

from kp2backlund.grid import Field2D, default_grid, make_grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(128, 128, 40.0, 40.0, -20.0, -20.0)


@pytest.fixture(scope="session")
def zero(grid):
    return Field2D(grid, np.zeros(grid.shape))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
