import numpy as np
import pytest

from cmclab import greens, symmetry
from cmclab.clifford import minimal_angle


def default_group(p=1, q=2):
    gens = [symmetry.compile_generator(p, q, g) for g in symmetry.default_admissible_generators(p, q)]
    return symmetry.close_group(p, q, gens)


@pytest.fixture(scope="session")
def group12():
    return default_group(1, 2)


@pytest.fixture(scope="session")
def field12(group12):
    return greens.solve_greens(1, 2, symmetry.orbit(group12), 40, 40)


@pytest.fixture(scope="session")
def t_star12():
    return minimal_angle(1, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
