"""Shared fixtures and the acceptance summary printed at the end of a run."""

import numpy as np
import pytest

from oslalm.ct import Geometry, ImageGrid, build_system_matrix, default_phantom, synthesize_weights
from oslalm.regularizer import Potential, RegularizerConfig
from oslalm.solvers import Problem

ACCEPTANCE = {}


def record(number, name, passed, detail=""):
    """Store one acceptance outcome; the summary hook prints them in order."""
    ACCEPTANCE[number] = (name, bool(passed), detail)
    print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {name}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d} {name}: {detail}")


@pytest.fixture(scope="session")
def small_ct():
    """32 x 32 PWLS problem with a quadratic penalty and no box."""
    grid = ImageGrid(32, 32, 1.0)
    geo = Geometry(48, 46, 1.0)
    x_true = default_phantom(grid)
    A = build_system_matrix(grid, geo)
    y, W = synthesize_weights(A, x_true, 1e5, seed=0)
    reg = RegularizerConfig(5.0, Potential("quadratic"))
    return Problem(A, W, y, grid, reg, None, geo, x_true)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
