import numpy as np
import pytest

from garnier.monodromy import solve_riemann_hilbert
from garnier.polygon import DirectionTuple
from garnier.weierstrass import WeierstrassFrame


def directions(degrees, heights):
    a = np.deg2rad(degrees)
    return DirectionTuple(np.column_stack([np.cos(a), np.sin(a), heights]))


TRIPLE = DirectionTuple(np.array([[1.0, 0.0, 0.1],
                                  [-0.5, np.sqrt(3) / 2, -0.05],
                                  [-0.5, -np.sqrt(3) / 2, 0.2]]))
QUAD = directions([0, 107, 203, 272], [-0.21, 0.1, 0.01, 0.1])
PENTA = directions([0, 68, 156, 212, 272], [0.0, 0.0, -0.13, -0.24, 0.22])
FIXTURES = {0: TRIPLE, 1: QUAD, 2: PENTA}


@pytest.fixture(scope="session")
def solutions():
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = solve_riemann_hilbert(FIXTURES[n])
        return cache[n]
    return get


@pytest.fixture(scope="session")
def frames(solutions):
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = WeierstrassFrame.from_solution(solutions(n))
        return cache[n]
    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, description); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {text}")
