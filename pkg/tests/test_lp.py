import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from shadowgame.errors import InvalidInput, SingularBasis, TooLarge
from shadowgame.lp import (canonicalize, canonicalize_budgeted, extend_with_action, min_payoff,
                           read_payoff, recover_strategy, solve_oracle, vertex_from_active_set,
                           write_payoff)

from conftest import MATCHING_PENNIES, linprog_value, random_game


def test_canonicalize_matching_pennies(mp_lp):
    assert_allclose(mp_lp.A, [[-2, 1], [2, 1], [1, 0], [-1, 0]])
    assert_allclose(mp_lp.b, [-1, 1, 1, 0])
    assert_allclose(mp_lp.c, [0, 1])
    assert mp_lp.normal_count == 2 and mp_lp.prob_block_start == 2
    assert mp_lp.variant == "simplex"


def test_canonicalize_zero_game():
    lp = canonicalize(np.zeros((2, 2)))
    assert_allclose(lp.A, [[0, 1], [0, 1], [1, 0], [-1, 0]])
    assert_allclose(lp.b, [0, 0, 1, 0])


def test_canonicalize_three_columns():
    lp = canonicalize([[1, 0, 2], [0, 1, 0]])
    assert_allclose(lp.A, [[-1, 1], [1, 1], [-2, 1], [1, 0], [-1, 0]])
    assert_allclose(lp.b, [0, 1, 0, 1, 0])


@pytest.mark.parametrize("G", [[[1, np.nan], [0, 1]], [[1, 2]], [[np.inf], [1]], [1, 2, 3]])
def test_canonicalize_rejects_bad_payoffs(G):
    with pytest.raises(InvalidInput):
        canonicalize(G)


def test_lp_arrays_are_read_only(mp_lp):
    with pytest.raises(ValueError):
        mp_lp.A[0, 0] = 5.0


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 6))
def test_canonical_constraints_match_game_inequalities(seed, n, m):
    # sample strategies on the simplex and compare Ax <= b with G^T xbar >= l
    rng = np.random.default_rng(seed)
    G = rng.uniform(-10, 10, (n, m))
    lp = canonicalize(G)
    assert lp.rows == m + n
    for _ in range(20):
        xbar = rng.dirichlet(np.ones(n))
        level = rng.uniform(-12, 12)
        x = np.append(xbar[:-1], level)
        assert lp.is_feasible(x, tol=1e-12) == bool(np.all(G.T @ xbar >= level - 1e-12))


def test_budgeted_identity_incidence():
    lp = canonicalize_budgeted(np.eye(2), 1)
    assert lp.rows == 2 + 2 * 2
    assert lp.variant == "budgeted"
    assert solve_oracle(lp).value == pytest.approx(0.5, abs=1e-12)


def test_budgeted_full_coverage():
    sol = solve_oracle(canonicalize_budgeted(np.eye(2), 2))
    assert sol.value == pytest.approx(1.0, abs=1e-12)
    assert_allclose(sol.strategy, [1, 1], atol=1e-12)


def test_budgeted_three_disjoint_paths():
    sol = solve_oracle(canonicalize_budgeted(np.eye(3), 1))
    assert sol.value == pytest.approx(1 / 3, abs=1e-12)


def test_budgeted_last_coordinate_capped():
    # without the x_n <= 1 row the optimum would put 2 units on the last edge
    G = np.array([[0.0], [0.0], [1.0]])
    sol = solve_oracle(canonicalize_budgeted(G, 2))
    assert sol.value == pytest.approx(1.0)
    assert sol.strategy[-1] <= 1 + 1e-12


@pytest.mark.parametrize("B", [0.5, 3.5, -1])
def test_budget_out_of_range(B):
    with pytest.raises(InvalidInput):
        canonicalize_budgeted(np.eye(3), B)


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(1, 5), st.sampled_from([1, 1.5, 2]))
def test_budgeted_oracle_matches_linprog(seed, n, m, B):
    rng = np.random.default_rng(seed)
    G = rng.uniform(0, 1, (n, m))
    if B > n:
        return
    sol = solve_oracle(canonicalize_budgeted(G, B))
    assert sol.value == pytest.approx(linprog_value(G, budget=B), abs=1e-7)
    assert np.all(sol.strategy >= -1e-9) and np.all(sol.strategy <= 1 + 1e-9)
    assert sol.strategy.sum() == pytest.approx(B)


def test_extend_with_losing_column(mp_lp):
    lp = extend_with_action(mp_lp, [-2, -0.5])
    assert lp.normal_count == 3 and lp.prob_block_start == 3
    assert_allclose(lp.A[2], [1.5, 1])
    assert lp.b[2] == -0.5


def test_extend_with_zero_column(mp_lp):
    lp = extend_with_action(mp_lp, [0, 0])
    assert_allclose(lp.A[2], [0, 1])
    assert lp.b[2] == 0


def test_extend_with_constant_column(mp_lp):
    lp = extend_with_action(mp_lp, [7, 7])
    assert_allclose(lp.A[2], [0, 1])
    assert lp.b[2] == 7


def test_extend_length_mismatch(mp_lp):
    with pytest.raises(InvalidInput):
        extend_with_action(mp_lp, [1, 2, 3])


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 6))
def test_extend_keeps_old_rows(seed, n, m):
    rng = np.random.default_rng(seed)
    G = rng.uniform(-10, 10, (n, m))
    g = rng.uniform(-10, 10, n)
    lp = canonicalize(G)
    new = extend_with_action(lp, g)
    assert_allclose(new.A[:m], lp.A[:m])
    assert_allclose(new.A[m + 1:], lp.A[m:])
    assert_allclose(new.b[m + 1:], lp.b[m:])
    # same as canonicalizing the widened matrix
    wide = canonicalize(np.column_stack([G, g]))
    assert_allclose(new.A, wide.A)
    assert_allclose(new.b, wide.b)


def test_recover_strategy_examples():
    s, v = recover_strategy([0.5, 0])
    assert_allclose(s, [0.5, 0.5]) and v == 0
    s, v = recover_strategy([0, 0, 3])
    assert_allclose(s, [0, 0, 1]) and v == 3
    s, v = recover_strategy([1, 0, -2])
    assert_allclose(s, [1, 0, 0]) and v == -2


def test_recover_strategy_budgeted():
    s, v = recover_strategy([1, 0.25, 0.5], budget=2)
    assert_allclose(s, [1, 0.25, 0.75]) and v == 0.5


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 6))
def test_round_trip_feasible_points(seed, n, m):
    rng = np.random.default_rng(seed)
    G = rng.uniform(-10, 10, (n, m))
    lp = canonicalize(G)
    xbar = rng.dirichlet(np.ones(n))
    level = float(np.min(G.T @ xbar)) - rng.uniform(0, 1)
    x = np.append(xbar[:-1], level)
    assert lp.is_feasible(x)
    s, v = recover_strategy(x)
    assert s.sum() == pytest.approx(1, abs=1e-9)
    assert np.all(G.T @ s >= v - 1e-9)


def test_vertex_from_active_set(mp_lp):
    assert_allclose(vertex_from_active_set(mp_lp, (0, 3)).x, [0, -1])
    assert_allclose(vertex_from_active_set(mp_lp, (0, 1)).x, [0.5, 0])
    with pytest.raises(SingularBasis):
        vertex_from_active_set(mp_lp, (2, 3))
    with pytest.raises(InvalidInput):
        vertex_from_active_set(mp_lp, (0,))


def test_oracle_matching_pennies(mp_lp):
    sol = solve_oracle(mp_lp)
    assert sol.value == pytest.approx(0, abs=1e-12)
    assert_allclose(sol.x, [0.5, 0], atol=1e-12)


def test_oracle_identity_and_zero():
    sol = solve_oracle(canonicalize(np.eye(2)))
    assert sol.value == pytest.approx(0.5)
    assert_allclose(sol.strategy, [0.5, 0.5])
    assert solve_oracle(canonicalize(np.zeros((2, 2)))).value == 0


def test_oracle_exact_mode_agrees():
    rng = np.random.default_rng(3)
    for _ in range(10):
        lp = canonicalize(rng.integers(-5, 6, (3, 4)))
        assert solve_oracle(lp, exact=True).value == pytest.approx(solve_oracle(lp).value, abs=1e-12)


def test_oracle_size_guard():
    with pytest.raises(TooLarge):
        solve_oracle(canonicalize(np.zeros((9, 2))))
    with pytest.raises(TooLarge):
        solve_oracle(canonicalize(np.zeros((2, 39))))


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 8))
def test_oracle_value_attained_by_pure_reply(seed, n, m):
    rng = np.random.default_rng(seed)
    G = random_game(rng, n, m)
    sol = solve_oracle(canonicalize(G))
    assert min_payoff(G, sol.strategy) == pytest.approx(sol.value, abs=1e-9)
    assert sol.value == pytest.approx(linprog_value(G), abs=1e-7)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 7))
def test_extra_column_never_raises_value(seed, n, m):
    rng = np.random.default_rng(seed)
    lp = canonicalize(rng.integers(-10, 11, (n, m)))
    new = extend_with_action(lp, rng.integers(-10, 11, n))
    assert solve_oracle(new).value <= solve_oracle(lp).value + 1e-12


def test_payoff_file_round_trip(tmp_path):
    G = np.array([[1.5, -2, 1e-17], [3, 0.1, -7]])
    write_payoff(G, tmp_path / "g.txt")
    assert np.array_equal(read_payoff(tmp_path / "g.txt"), G)


@pytest.mark.parametrize("text", ["", "2 2\n1 2\n", "2 2\n1 2\n3\n", "x y\n", "2 1\n1\nz\n"])
def test_payoff_file_errors(tmp_path, text):
    (tmp_path / "g.txt").write_text(text)
    with pytest.raises(InvalidInput):
        read_payoff(tmp_path / "g.txt")


def test_digest_tracks_content(mp_lp):
    assert mp_lp.digest() == canonicalize(MATCHING_PENNIES).digest()
    assert mp_lp.digest() != extend_with_action(mp_lp, [0, 0]).digest()
