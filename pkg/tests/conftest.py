import numpy as np
import pytest
from hypothesis import settings
from scipy.optimize import linprog

from shadowgame.lp import canonicalize

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repo")

MATCHING_PENNIES = np.array([[1.0, -1.0], [-1.0, 1.0]])

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


def random_game(rng, n, m, low=-10, high=10, perturb=True):
    G = rng.integers(low, high + 1, size=(n, m)).astype(float)
    if perturb:
        G += rng.uniform(-1e-7, 1e-7, size=G.shape)
    return G


def linprog_value(G, budget=None):
    """Game value from scipy's HiGHS, used as an independent reference."""
    n, m = G.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-G.T, np.ones((m, 1))])
    A_eq = np.append(np.ones(n), 0.0)[None]
    bound = (0, 1) if budget is not None else (0, None)
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1.0 if budget is None else budget],
                  bounds=[bound] * n + [(None, None)], method="highs")
    assert res.status == 0
    return -res.fun


@pytest.fixture
def mp_lp():
    return canonicalize(MATCHING_PENNIES)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split("-")[1])):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
