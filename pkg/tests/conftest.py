from functools import lru_cache

import numpy as np
import pytest

from polyvem.mesh import mesh_family

import acceptance_log

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
HEXAGON = np.array([[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 7)[:-1]])
L_SHAPE = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)


@lru_cache(maxsize=None)
def cached_mesh(family, level, seed=0):
    return mesh_family(family, level, seed=seed)


@pytest.fixture
def unit_square():
    return UNIT_SQUARE.copy()


@pytest.fixture
def hexagon():
    return HEXAGON.copy()




def pytest_terminal_summary(terminalreporter):
    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.summary_lines():
        terminalreporter.write_line(line)
