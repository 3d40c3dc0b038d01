"""Shadow-vertex simplex solver working on an active-set searching table.

The table expresses ``c``, the auxiliary objective ``u`` and every constraint
row in the basis formed by the active rows ``A_Omega``:

    c   = alpha @ A_Omega          Qc = -alpha @ b_Omega
    u   = beta  @ A_Omega          Qu = -beta  @ b_Omega
    A_i = gamma_i @ A_Omega        phi_i = b_i - gamma_i @ b_Omega

so the current objective is ``-Qc`` and ``phi >= 0`` means feasibility.
Moving the weight ``u + mu * c`` from ``u`` towards ``c`` walks along the
shadow of the feasible set on ``span(u, c)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInput, InvalidTable, IterationLimit, NoSolution, RetryExhausted
from .lp import EPS, CanonicalLP, Solution, Vertex, vertex_from_active_set

log = logging.getLogger(__name__)

REFACTOR_EVERY = 50
AUX_DRAWS = 10
DET_FLOOR = 1e-12
DRIFT_TOL = 1e-10
PIVOT_TOL = EPS
NOISE_TOL = 1e-13


@dataclass(eq=False)
class SearchTable:
    alpha: np.ndarray
    beta: np.ndarray
    Qc: float
    Qu: float
    gamma: np.ndarray
    phi: np.ndarray
    active_set: tuple
    u: np.ndarray

    @property
    def objective(self) -> float:
        return -self.Qc

    def copy(self) -> "SearchTable":
        return SearchTable(self.alpha.copy(), self.beta.copy(), self.Qc, self.Qu,
                           self.gamma.copy(), self.phi.copy(), tuple(self.active_set), self.u.copy())


@dataclass(frozen=True, eq=False)
class AuxiliaryObjective:
    u: np.ndarray
    beta0: np.ndarray


@dataclass(eq=False)
class PathEntry:
    vertex: Vertex
    table: SearchTable

    @property
    def active_set(self) -> tuple:
        return self.vertex.active_set


@dataclass(eq=False)
class SearchPath:
    """Vertices visited by a solve, each with the table that describes it."""

    entries: list = field(default_factory=list)
    status: str = "truncated"

    def __len__(self):
        return len(self.entries)

    @property
    def pivots(self) -> int:
        return max(len(self.entries) - 1, 0)

    @property
    def last(self) -> PathEntry:
        return self.entries[-1]

    def objectives(self) -> list:
        return [e.table.objective for e in self.entries]


@dataclass(frozen=True, eq=False)
class PivotOutcome:
    """One of ``optimal`` (with value), ``no_solution`` or ``step``."""

    kind: str
    value: float | None = None
    table: SearchTable | None = None
    moved_out: int | None = None
    moved_in: int | None = None


def table_from_active_set(lp: CanonicalLP, active_set, u) -> SearchTable:
    """Build a table by direct solves against ``A_Omega`` (used for refactorization)."""
    omega = tuple(int(i) for i in active_set)
    M = lp.A[list(omega)]
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        raise InvalidTable(f"active rows {omega} are singular") from None
    u = np.asarray(u, dtype=float)
    b_om = lp.b[list(omega)]
    alpha = lp.c @ inv
    beta = u @ inv
    gamma = lp.A @ inv
    gamma[list(omega)] = np.eye(lp.n)
    phi = lp.b - gamma @ b_om
    phi[list(omega)] = 0.0
    return SearchTable(alpha, beta, float(-alpha @ b_om), float(-beta @ b_om), gamma, phi, omega, u.copy())


def _screen(A_om, alpha, beta, u, c) -> bool:
    """General-position screen for the initial basis and auxiliary objective."""
    un = u / np.linalg.norm(u)
    cn = c / np.linalg.norm(c)
    if np.linalg.norm(un - (un @ cn) * cn) < DET_FLOOR:
        return False
    # replacing basis rows j,k by (u, c) scales det(A_Omega) by the 2x2 minor
    det = abs(np.linalg.det(A_om))
    idx = [j for j in range(len(alpha)) if abs(alpha[j]) > EPS]
    for a, j in enumerate(idx):
        for k in idx[a + 1:]:
            if det * abs(alpha[j] * beta[k] - alpha[k] * beta[j]) < DET_FLOOR:
                return False
    return True


def choose_auxiliary(lp: CanonicalLP, active_set, rng=None, draws=AUX_DRAWS) -> AuxiliaryObjective:
    """Pick ``u = beta @ A_Omega0`` with ``beta > 0``.

    ``beta = 1`` is tried first, then up to ``draws`` random vectors with
    entries uniform in [0.5, 1.5].
    """
    omega = list(active_set)
    A_om = lp.A[omega]
    alpha = np.linalg.solve(A_om.T, lp.c)
    if rng is None:
        rng = np.random.default_rng(0)
    for attempt in range(draws + 1):
        beta = np.ones(lp.n) if attempt == 0 else rng.uniform(0.5, 1.5, lp.n)
        u = beta @ A_om
        if _screen(A_om, alpha, beta, u, lp.c):
            return AuxiliaryObjective(u, beta)
    raise RetryExhausted(f"no admissible auxiliary objective after {draws} random draws")


def _simplex_initial(lp: CanonicalLP):
    m, n = lp.normal_count, lp.n
    l = int(np.argmin(lp.b[:m]))
    omega = (l,) + tuple(range(m + 1, m + n))
    A_l = lp.A[l]
    alpha = np.concatenate([[1.0], A_l[: n - 1]])
    gamma = np.zeros((lp.rows, n))
    gamma[:m, 0] = 1.0
    gamma[:m, 1:] = A_l[: n - 1] - lp.A[:m, : n - 1]
    gamma[m, 1:] = -1.0
    gamma[m + 1:, 1:] = np.eye(n - 1)
    phi = np.zeros(lp.rows)
    phi[:m] = lp.b[:m] - lp.b[l]
    phi[m] = lp.b[m]
    x0 = np.zeros(n)
    x0[-1] = lp.b[l]
    return omega, alpha, gamma, phi, float(-lp.b[l]), x0


def _budgeted_initial(lp: CanonicalLP):
    """Start at a corner of the budget box with the worst payoff row active."""
    m, n = lp.normal_count, lp.n
    k_free = n - 1
    B = lp.budget
    lower = [m + 1 + i for i in range(k_free)]
    upper = [m + 1 + k_free + i for i in range(k_free)]
    for ones in sorted({math.ceil(B) - 1, math.floor(B)}):
        if not 0 <= ones <= k_free:
            continue
        box = tuple(upper[:ones] + lower[ones:])
        xs = np.linalg.solve(lp.A[list(box)][:, :k_free], lp.b[list(box)])
        levels = lp.b[:m] - lp.A[:m, :k_free] @ xs
        l = int(np.argmin(levels))
        x0 = np.append(xs, levels[l])
        if lp.is_feasible(x0):
            return (l,) + box, x0
    raise InvalidInput("no feasible starting corner for the budgeted LP")


def init_table(lp: CanonicalLP, rng=None):
    """Initial searching table and vertex.

    For the probability-simplex LP this is the closed-form construction: the
    pure strategy on the last action against the column minimizing its payoff.
    """
    if lp.variant == "simplex":
        omega, alpha, gamma, phi, Qc, x0 = _simplex_initial(lp)
        aux = choose_auxiliary(lp, omega, rng=rng)
        b_om = lp.b[list(omega)]
        table = SearchTable(alpha, aux.beta0.copy(), Qc, float(-aux.beta0 @ b_om), gamma, phi, omega,
                            aux.u.copy())
        return table, Vertex(x0, omega)
    omega, x0 = _budgeted_initial(lp)
    aux = choose_auxiliary(lp, omega, rng=rng)
    return table_from_active_set(lp, omega, aux.u), Vertex(x0, omega)


def _pick(values, labels, best):
    """Index of the extreme value; near ties go to the lowest label."""
    target = best(values)
    tol = 1e-12 * (1.0 + abs(target))
    tied = [i for i, v in enumerate(values) if abs(v - target) <= tol]
    return min(tied, key=lambda i: labels[i])


def pivot_step(table: SearchTable, lp: CanonicalLP) -> PivotOutcome:
    """One shadow-vertex pivot: optimality test, ratio tests, table update."""
    n = lp.n
    if table.gamma.shape != (lp.rows, n) or len(table.active_set) != n or table.phi.shape != (lp.rows,):
        raise InvalidTable("table shape does not match the LP")
    omega = list(table.active_set)
    alpha, beta, gamma, phi = table.alpha, table.beta, table.gamma, table.phi
    if np.any(np.abs(gamma[omega] - np.eye(n)) > 1e-7):
        raise InvalidTable("active rows are not unit rows of gamma")

    neg = np.flatnonzero(alpha < -EPS)
    if neg.size == 0:
        return PivotOutcome("optimal", value=-table.Qc)
    ratios = -beta[neg] / alpha[neg]
    k = int(neg[_pick(ratios, [omega[j] for j in neg], np.min)])

    active = np.zeros(lp.rows, dtype=bool)
    active[omega] = True
    cand = np.flatnonzero(~active & (gamma[:, k] < -PIVOT_TOL))
    if cand.size == 0:
        return PivotOutcome("no_solution")
    ratios = phi[cand] / gamma[cand, k]
    l = int(cand[_pick(ratios, list(cand), np.max)])
    # rows with |gamma| below the pivot tolerance still move; admit them only if
    # skipping them would push their slack below -EPS
    small = np.flatnonzero(~active & (gamma[:, k] < -NOISE_TOL) & (gamma[:, k] >= -PIVOT_TOL))
    if small.size and np.any(phi[small] - gamma[small, k] * (phi[l] / gamma[l, k]) < -EPS):
        cand = np.union1d(cand, small)
        ratios = phi[cand] / gamma[cand, k]
        l = int(cand[_pick(ratios, list(cand), np.max)])

    g_l = gamma[l].copy()
    piv = g_l[k]
    new = table.copy()
    new.alpha = alpha - alpha[k] * g_l / piv
    new.alpha[k] = alpha[k] / piv
    new.beta = beta - beta[k] * g_l / piv
    new.beta[k] = beta[k] / piv
    col = gamma[:, k].copy()
    new.gamma = gamma - np.outer(col / piv, g_l)
    new.gamma[:, k] = col / piv
    new.phi = phi - col / piv * phi[l]
    new.Qc = table.Qc - phi[l] * alpha[k] / piv
    new.Qu = table.Qu - phi[l] * beta[k] / piv
    out = omega[k]
    omega[k] = l
    new.active_set = tuple(omega)
    new.gamma[omega] = np.eye(n)
    new.phi[omega] = 0.0
    return PivotOutcome("step", table=new, moved_out=out, moved_in=l)


def verify_table(table: SearchTable, lp: CanonicalLP, tol=1e-7) -> list:
    """Diagnostics for every violated table identity; empty when the table is sound."""
    issues = []
    omega = list(table.active_set)
    if len(omega) != lp.n or len(set(omega)) != lp.n:
        return [f"active set {tuple(omega)} must hold {lp.n} distinct rows"]
    if table.gamma.shape != (lp.rows, lp.n) or table.phi.shape != (lp.rows,):
        return ["table shape does not match the LP"]
    A_om, b_om = lp.A[omega], lp.b[omega]

    def off(lhs, rhs, size=0.0):
        # residual relative to the magnitude of the terms that were summed
        lhs, rhs = np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)
        return float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(rhs) + size), initial=0.0))

    absA = np.abs(A_om)
    if off(table.alpha @ A_om, lp.c, np.abs(table.alpha) @ absA) > tol:
        issues.append("c-representation: c != alpha @ A_Omega")
    if off(table.beta @ A_om, table.u, np.abs(table.beta) @ absA) > tol:
        issues.append("u-representation: u != beta @ A_Omega")
    if off(table.gamma @ A_om, lp.A, np.abs(table.gamma) @ absA) > tol:
        issues.append("row-representation: A_i != gamma_i @ A_Omega")
    if off(table.phi, lp.b - table.gamma @ b_om, np.abs(table.gamma) @ np.abs(b_om)) > tol:
        issues.append("slack: phi != b - gamma @ b_Omega")
    if off(table.gamma[omega], np.eye(lp.n)) > tol or off(table.phi[omega], 0.0) > tol:
        issues.append("active-row: active rows must be unit rows with zero slack")
    if (off(table.Qc, -table.alpha @ b_om, np.abs(table.alpha) @ np.abs(b_om)) > tol
            or off(table.Qu, -table.beta @ b_om, np.abs(table.beta) @ np.abs(b_om)) > tol):
        issues.append("objective: Qc/Qu disagree with alpha/beta")
    bad = np.flatnonzero(table.phi < -EPS)
    if bad.size:
        issues.append(f"feasibility: negative slack on rows {bad.tolist()}")
    try:
        x = np.linalg.solve(A_om, b_om)
    except np.linalg.LinAlgError:
        issues.append("basis: A_Omega is singular")
    else:
        if off(-table.Qc, lp.c @ x, np.abs(table.alpha) @ np.abs(b_om)) > tol:
            issues.append("objective: -Qc != c^T x at the basis vertex")
    return issues


def drifted(table: SearchTable, lp: CanonicalLP, tol=DRIFT_TOL) -> bool:
    """Cheap O(n^2) residual of the c-representation; large after ill-conditioned pivots."""
    A_om = lp.A[list(table.active_set)]
    return float(np.max(np.abs(table.alpha @ A_om - lp.c))) > tol


def pivot_limit(lp: CanonicalLP) -> int:
    return 10 * min(math.comb(lp.rows, lp.n), 10**6)


def run_pivots(lp: CanonicalLP, table: SearchTable, entries: list, *, verify_every=None,
               refactor_every=REFACTOR_EVERY, max_pivots=None, on_step=None) -> str:
    """Pivot from ``table`` until termination, appending visited vertices to ``entries``.

    ``entries`` must already end with the entry for ``table``.  Returns the
    final status, ``optimal`` or ``no_solution``.
    """
    limit = pivot_limit(lp) if max_pivots is None else max_pivots
    steps = 0
    while True:
        outcome = pivot_step(table, lp)
        if outcome.kind == "optimal":
            return "optimal"
        if outcome.kind == "no_solution":
            return "no_solution"
        steps += 1
        if steps > limit:
            raise IterationLimit(f"more than {limit} pivots; the pivot rule is cycling")
        table = outcome.table
        if (refactor_every and steps % refactor_every == 0) or drifted(table, lp):
            table = table_from_active_set(lp, table.active_set, table.u)
        if verify_every and steps % verify_every == 0:
            issues = verify_table(table, lp)
            if issues:
                raise InvalidTable("; ".join(issues))
        prev = entries[-1].table.objective
        if table.objective - prev <= 1e-12:
            log.warning("objective did not increase strictly (%.3g -> %.3g)", prev, table.objective)
        entries.append(PathEntry(vertex_from_active_set(lp, table.active_set), table))
        if on_step is not None:
            on_step(outcome)


def solution_from_path(lp: CanonicalLP, path: SearchPath) -> Solution:
    return Solution.from_point(path.last.vertex.x, lp)


def solve(lp: CanonicalLP, *, rng=None, verify_every=None, refactor_every=REFACTOR_EVERY,
          max_pivots=None):
    """Solve the canonical LP from scratch, recording the search path.

    Raises NoSolution when the LP is unbounded.
    """
    table, vertex = init_table(lp, rng=rng)
    if verify_every:
        issues = verify_table(table, lp)
        if issues:
            raise InvalidTable("; ".join(issues))
    path = SearchPath([PathEntry(vertex, table)])
    status = run_pivots(lp, table, path.entries, verify_every=verify_every,
                        refactor_every=refactor_every, max_pivots=max_pivots)
    if status == "no_solution":
        path.status = "truncated"
        raise NoSolution("the LP is unbounded above")
    path.status = "optimal"
    return solution_from_path(lp, path), path


def check_path(path: SearchPath, lp: CanonicalLP, verify_every=1) -> list:
    """Diagnostics for adjacency, strict improvement, feasibility and table identities."""
    issues = []
    for i, entry in enumerate(path.entries):
        if not lp.is_feasible(entry.vertex.x, tol=1e-7):
            issues.append(f"entry {i}: vertex infeasible")
        if set(entry.vertex.active_set) != set(entry.table.active_set):
            issues.append(f"entry {i}: vertex and table active sets differ")
        probs = sum(1 for j in entry.active_set if j >= lp.prob_block_start)
        if probs > lp.n - 1:
            issues.append(f"entry {i}: {probs} active rows from the probability block")
        if verify_every and i % verify_every == 0:
            issues += [f"entry {i}: {msg}" for msg in verify_table(entry.table, lp)]
        if i:
            prev = path.entries[i - 1]
            if len(set(prev.active_set) & set(entry.active_set)) != lp.n - 1:
                issues.append(f"entry {i}: not adjacent to entry {i - 1}")
            if entry.table.objective - prev.table.objective <= 1e-12:
                issues.append(f"entry {i}: objective did not increase strictly")
    return issues


def snapshot(path: SearchPath) -> SearchPath:
    return replace(path, entries=[PathEntry(e.vertex, e.table.copy()) for e in path.entries])
