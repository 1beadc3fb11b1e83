import numpy as np
import pytest

from nonlocal_mm.grid import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid():
    return Grid.box([0.0], [1.0], 6, trunc_radius=0.5)


@pytest.fixture
def two_node_grid():
    # one interior node at 0 and one exterior node at 1, unit spacing
    return Grid(1, 1.0, np.array([[0.0], [1.0]]), np.array([True, False]), (-0.5,), (0.5,), 1.0)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
