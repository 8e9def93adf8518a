import numpy as np
import pytest

from lamiwp.quadrature import build_grid
from lamiwp.subgroup_lattice import low_index_subgroups
from lamiwp.surface_group import build_genus_group

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def G2():
    return build_genus_group(2)


@pytest.fixture(scope="session")
def reps3(G2):
    return low_index_subgroups(G2, 3)


@pytest.fixture(scope="session")
def T2(reps3):
    return next(T for T in reps3 if T.degree == 2)


@pytest.fixture(scope="session")
def T3n(reps3):
    return next(T for T in reps3 if T.degree == 3 and T.is_normal)


@pytest.fixture(scope="session")
def T3(reps3):
    return next(T for T in reps3 if T.degree == 3 and not T.is_normal)


@pytest.fixture(scope="session")
def grid2():
    return build_grid(2, 2)


@pytest.fixture(scope="session")
def grid4():
    return build_grid(2, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
