import numpy as np
import pytest

from paffine import Ball, Ellipsoid, FourierBody2D


@pytest.fixture(scope="session")
def disc():
    return Ball(2, 1.0)


@pytest.fixture(scope="session")
def ellipse():
    return Ellipsoid(np.diag([2.0, 1.0]))


@pytest.fixture(scope="session")
def fourier():
    # h = 1 + 0.1 cos 2θ
    return FourierBody2D([1.0, 0.0, 0.1])


@pytest.fixture(scope="session")
def lopsided():
    # no central symmetry, Santaló point away from the origin
    return FourierBody2D([1.0, 0.05, 0.08, 0.02], [0.0, -0.03, 0.01])


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get(
        "tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
