import numpy as np
import pytest

from logcalderon import (
    CellField,
    assemble_abslog_gram,
    assemble_log_form,
    assemble_potential,
    build_grid,
    define_regions,
    mass_matrix,
)

# 1D layout shared by most tests: Omega = [-1/2, 1/2] (16 cells, h = 1/16)
# inside [-2, 2], one window of 9 cells on each side past a two-cell gap.
BOX_1D = [-2.0, 2.0]
CELLS_1D = 64
OMEGA_1D = {"box": [-0.5, 0.5]}
WINDOW_1D = {"boxes": [[-1.2, -0.6], [0.6, 1.2]]}
TRUTH_1D = (0.5, 1.0, 0.25, 0.75)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid1():
    return build_grid(BOX_1D, CELLS_1D)


@pytest.fixture(scope="session")
def regions1(grid1):
    return define_regions(grid1, OMEGA_1D, WINDOW_1D, partition_spec={"blocks_per_axis": [4]})


@pytest.fixture(scope="session")
def K1(grid1):
    return assemble_log_form(grid1)


@pytest.fixture(scope="session")
def M1(grid1):
    return mass_matrix(grid1)


@pytest.fixture(scope="session")
def G1(grid1):
    return assemble_abslog_gram(grid1)


@pytest.fixture(scope="session")
def small16():
    """16 cells on [-1, 1] (h = 1/8) for route and expansion checks."""
    return build_grid([-1.0, 1.0], 16)


def block_potential(grid, regions, values):
    q = np.zeros(grid.num_cells)
    for block, v in zip(regions.partition, values):
        q[block] = v
    return CellField.on(grid, regions.omega, q[regions.omega], "omega")


def potential_matrix(grid, regions, values):
    return assemble_potential(grid, CellField.on(grid, regions.omega, values, "omega")).matrix


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
