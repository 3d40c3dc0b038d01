"""Game-to-LP transformations and the brute-force vertex oracle.

Player 1 maximizes over the canonical LP ``max c^T x  s.t.  A x <= b`` where
``x = [xbar_1, ..., xbar_{n-1}, value]`` and ``xbar_n`` is implied by the
probability (or budget) constraint.  All constraint indices in this package
are 0-based: rows ``0..m-1`` are the normal (payoff) constraints, row ``m`` is
``1^T x <= 1`` (or ``<= B``) and the remaining rows are the bound constraints.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InvalidInput, SingularBasis, TooLarge

EPS = 1e-9

ORACLE_MAX_ROWS = 40
ORACLE_MAX_VARS = 8


def check_payoff(G) -> np.ndarray:
    """Return ``G`` as a float matrix, raising InvalidInput when it is unusable."""
    G = np.array(G, dtype=float)
    if G.ndim != 2:
        raise InvalidInput(f"payoff matrix must be 2-D, got shape {G.shape}")
    n, m = G.shape
    if n < 2 or m < 1:
        raise InvalidInput(f"payoff matrix needs n >= 2 rows and m >= 1 columns, got {n}x{m}")
    if not np.all(np.isfinite(G)):
        raise InvalidInput("payoff matrix has non-finite entries")
    return G


def read_payoff(path) -> np.ndarray:
    """Read a matrix file: first line ``n m``, then n rows of m numbers."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise InvalidInput(f"{path}: empty matrix file")
    try:
        n, m = (int(t) for t in lines[0].split())
        rows = [[float(t) for t in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    if len(rows) != n or any(len(r) != m for r in rows):
        raise InvalidInput(f"{path}: expected {n} rows of {m} numbers")
    return check_payoff(rows)


def write_payoff(G, path) -> None:
    G = np.asarray(G, dtype=float)
    out = [f"{G.shape[0]} {G.shape[1]}"]
    out += [" ".join(format(v, ".17g") for v in row) for row in G]
    Path(path).write_text("\n".join(out) + "\n")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CanonicalLP:
    """``max c^T x`` subject to ``A x <= b``.

    ``normal_count`` counts the payoff rows at the top of ``A``;
    ``prob_block_start`` is the index of the first row after them.  ``budget``
    is None for the probability-simplex form and B for the budgeted form.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    normal_count: int
    prob_block_start: int
    budget: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "b", _frozen(self.b))
        object.__setattr__(self, "c", _frozen(self.c))
        if self.A.ndim != 2 or self.b.shape != (self.A.shape[0],) or self.c.shape != (self.A.shape[1],):
            raise InvalidInput("inconsistent LP shapes")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def rows(self) -> int:
        return self.A.shape[0]

    @property
    def variant(self) -> str:
        return "simplex" if self.budget is None else "budgeted"

    @property
    def scale(self) -> float:
        return 1.0 if self.budget is None else float(self.budget)

    def slack(self, x) -> np.ndarray:
        return self.b - self.A @ np.asarray(x, dtype=float)

    def is_feasible(self, x, tol=EPS) -> bool:
        return bool(np.all(self.slack(x) >= -tol))

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.A, self.b, self.c):
            h.update(str(arr.shape).encode())
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        h.update(f"{self.normal_count}:{self.prob_block_start}:{self.budget!r}".encode())
        return h.hexdigest()


def _payoff_block(G: np.ndarray, scale: float):
    # -G^T T with T = [I_{n-1}; -1^T]  gives  G_n,j - G_i,j  in column i.
    n = G.shape[0]
    block = (G[n - 1][:, None] - G[: n - 1].T)
    A = np.hstack([block, np.ones((G.shape[1], 1))])
    return A, scale * G[n - 1]


def canonicalize(G) -> CanonicalLP:
    """Canonical LP whose optimum is player 1's security strategy for ``G``."""
    G = check_payoff(G)
    n, m = G.shape
    top, b_top = _payoff_block(G, 1.0)
    prob = np.zeros((n, n))
    prob[0, : n - 1] = 1.0
    prob[1:, : n - 1] = -np.eye(n - 1)
    b_prob = np.zeros(n)
    b_prob[0] = 1.0
    c = np.zeros(n)
    c[-1] = 1.0
    return CanonicalLP(np.vstack([top, prob]), np.concatenate([b_top, b_prob]), c, m, m)


def canonicalize_budgeted(G, budget) -> CanonicalLP:
    """Canonical LP for a defender with ``sum(xbar) = B`` and ``0 <= xbar <= 1``.

    Rows: m payoff rows, ``1^T x <= B``, ``-x_i <= 0``, ``x_i <= 1`` and a last
    row ``-1^T x <= -(B - 1)`` that keeps the implied ``xbar_n`` at most one.
    """
    G = check_payoff(G)
    n, m = G.shape
    budget = float(budget)
    if not (1.0 <= budget <= n):
        raise InvalidInput(f"budget must lie in [1, {n}], got {budget}")
    top, b_top = _payoff_block(G, budget)
    k = n - 1
    rows = [np.append(np.ones(k), 0.0)]
    rows += [np.append(-np.eye(k)[i], 0.0) for i in range(k)]
    rows += [np.append(np.eye(k)[i], 0.0) for i in range(k)]
    rows.append(np.append(-np.ones(k), 0.0))
    b_box = np.concatenate([[budget], np.zeros(k), np.ones(k), [-(budget - 1.0)]])
    c = np.zeros(n)
    c[-1] = 1.0
    return CanonicalLP(np.vstack([top, np.array(rows)]), np.concatenate([b_top, b_box]), c, m, m,
                       budget=budget)


def action_row(g, scale=1.0):
    """Constraint row and right-hand side contributed by a new opponent column ``g``."""
    g = np.asarray(g, dtype=float)
    return np.append(g[-1] - g[:-1], 1.0), scale * g[-1]


def extend_with_action(lp: CanonicalLP, g) -> CanonicalLP:
    """Insert the row for a new opponent action right after the payoff rows."""
    g = np.asarray(g, dtype=float)
    if g.shape != (lp.n,):
        raise InvalidInput(f"new column must have length {lp.n}, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise InvalidInput("new column has non-finite entries")
    row, rhs = action_row(g, lp.scale)
    m = lp.normal_count
    A = np.vstack([lp.A[:m], row, lp.A[m:]])
    b = np.concatenate([lp.b[:m], [rhs], lp.b[m:]])
    return CanonicalLP(A, b, lp.c, m + 1, m + 1, budget=lp.budget)


def with_rhs(lp: CanonicalLP, b) -> CanonicalLP:
    return CanonicalLP(lp.A, b, lp.c, lp.normal_count, lp.prob_block_start, budget=lp.budget)


def relax_budgeted(lp: CanonicalLP, rng, size=1e-6) -> CanonicalLP:
    """Loosen every right-hand side of a budgeted LP by a small random amount.

    Integer budgets make the box corners degenerate.  Each row gets a slack in
    ``[size/2, size]``; the two budget rows get ``[2 size, 3 size]``, which keeps
    one of the two starting corners feasible.
    """
    if lp.variant != "budgeted":
        raise InvalidInput("relax_budgeted expects a budgeted LP")
    delta = size * rng.uniform(0.5, 1.0, lp.rows)
    delta[lp.normal_count] = size * rng.uniform(2.0, 3.0)
    delta[-1] = size * rng.uniform(2.0, 3.0)
    return with_rhs(lp, lp.b + delta)


def recover_strategy(x, budget=1.0):
    """Split an LP point into (mixed strategy, game value)."""
    x = np.asarray(x, dtype=float)
    head = x[:-1]
    strategy = np.append(head, budget - head.sum())
    return strategy, float(x[-1])


@dataclass(frozen=True, eq=False)
class Vertex:
    x: np.ndarray
    active_set: tuple


@dataclass(frozen=True, eq=False)
class Solution:
    x: np.ndarray | None
    value: float | None
    strategy: np.ndarray | None
    status: str = "optimal"

    @classmethod
    def from_point(cls, x, lp: CanonicalLP) -> "Solution":
        x = np.array(x, dtype=float)
        strategy, value = recover_strategy(x, lp.scale)
        return cls(x, value, strategy)

    @classmethod
    def none(cls) -> "Solution":
        return cls(None, None, None, "no_solution")


def vertex_from_active_set(lp: CanonicalLP, active_set) -> Vertex:
    """Solve ``A_Omega x = b_Omega``; SingularBasis when the rows are dependent."""
    omega = tuple(int(i) for i in active_set)
    if len(omega) != lp.n:
        raise InvalidInput(f"active set needs {lp.n} indices, got {len(omega)}")
    M = lp.A[list(omega)]
    if abs(np.linalg.det(M)) < 1e-12 or np.linalg.cond(M) > 1e12:
        raise SingularBasis(f"rows {omega} are linearly dependent")
    x = np.linalg.solve(M, lp.b[list(omega)])
    return Vertex(x, omega)


def _solve_fraction(M, v):
    """Gauss-Jordan over Fractions; None when M is singular."""
    n = len(M)
    aug = [list(row) + [rhs] for row, rhs in zip(M, v)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [a / p for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[-1] for row in aug]


def _oracle_exact(lp: CanonicalLP) -> Solution:
    A = [[Fraction(v) for v in row] for row in lp.A]
    b = [Fraction(v) for v in lp.b]
    c = [Fraction(v) for v in lp.c]
    best = None
    best_sets = []
    for omega in itertools.combinations(range(lp.rows), lp.n):
        x = _solve_fraction([A[i] for i in omega], [b[i] for i in omega])
        if x is None:
            continue
        if any(sum(a * xi for a, xi in zip(A[i], x)) > b[i] for i in range(lp.rows)):
            continue
        val = sum(ci * xi for ci, xi in zip(c, x))
        if best is None or val > best[0]:
            best, best_sets = (val, x), [omega]
        elif val == best[0] and x == best[1]:
            best_sets.append(omega)
    if best is None:
        return Solution.none()
    # bounded iff c lies in the cone of the active rows for some basis at the best point
    for omega in best_sets:
        MT = [[A[i][j] for i in omega] for j in range(lp.n)]
        mult = _solve_fraction(MT, c)
        if mult is not None and all(v >= 0 for v in mult):
            return Solution.from_point([float(v) for v in best[1]], lp)
    return Solution.none()


def solve_oracle(lp: CanonicalLP, exact=False, tol=1e-10) -> Solution:
    """Ground-truth optimum by enumerating every square subsystem of ``A x <= b``.

    The answer is the best vertex among bases that are both primal feasible
    and dual feasible (``c`` in the cone of the basis rows).

    With ``exact=True`` all arithmetic is done in rationals (the float data is
    converted exactly), which is only sensible for small systems.
    """
    if lp.rows > ORACLE_MAX_ROWS or lp.n > ORACLE_MAX_VARS:
        raise TooLarge(f"oracle limited to {ORACLE_MAX_ROWS} rows and {ORACLE_MAX_VARS} variables")
    if exact:
        if lp.n > 6:
            raise TooLarge("exact oracle limited to 6 variables")
        return _oracle_exact(lp)

    combos = np.array(list(itertools.combinations(range(lp.rows), lp.n)))
    if combos.size == 0:
        return Solution.none()
    M = lp.A[combos]
    dets = np.linalg.det(M)
    keep = np.abs(dets) > 1e-12
    combos, M = combos[keep], M[keep]
    if len(combos) == 0:
        return Solution.none()
    xs = np.linalg.solve(M, lp.b[combos][..., None])[..., 0]
    scale = 1.0 + np.abs(lp.b).max()
    feasible = np.all(xs @ lp.A.T <= lp.b + tol * scale, axis=1)
    if not feasible.any():
        return Solution.none()
    combos, M, xs = combos[feasible], M[feasible], xs[feasible]
    # a basis that is primal and dual feasible is optimal; no such basis means unbounded
    mults = np.linalg.solve(np.transpose(M, (0, 2, 1)), np.broadcast_to(lp.c, xs.shape)[..., None])[..., 0]
    ok = np.all(mults >= -tol, axis=1)
    if not ok.any():
        return Solution.none()
    vals = np.where(ok, xs @ lp.c, -np.inf)
    return Solution.from_point(xs[int(np.argmax(vals))], lp)


def min_payoff(G, strategy) -> float:
    """Worst-case expected payoff of ``strategy`` against pure opponent replies."""
    return float(np.min(np.asarray(G, dtype=float).T @ np.asarray(strategy, dtype=float)))


def comb_capped(n, k, cap=10**6):
    return min(math.comb(n, k), cap)
