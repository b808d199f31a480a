import numpy as np
import pytest

from chsplit.spectral import Grid, RealField

ACCEPTANCE_LINES = []


def trig(grid, terms):
    """Field from ``(k, cos_coeff, sin_coeff)`` triples."""
    u = np.zeros(grid.n_points)
    for k, c, s in terms:
        u += c * np.cos(k * grid.x) + s * np.sin(k * grid.x)
    return RealField(grid, u)


@pytest.fixture
def grid16():
    return Grid(16)


@pytest.fixture
def grid64():
    return Grid(64)


@pytest.fixture
def grid256():
    return Grid(256)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
