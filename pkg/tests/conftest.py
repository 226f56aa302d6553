import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hartree.grid import gaussian, make_grid  # noqa: E402
from hartree.potentials import BumpSpec, preset_example  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grids256():
    return make_grid(256, -10, 10), make_grid(256, -16, 16)


@pytest.fixture(scope="session")
def example256(grids256):
    gx, gy = grids256
    return preset_example(gx, gy, 1.0, 1.0, BumpSpec(0.2, 2.0))


@pytest.fixture
def gaussians256(grids256):
    gx, gy = grids256
    return gaussian(gx), gaussian(gy)
