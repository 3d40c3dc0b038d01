"""Warm-started re-solves after the opponent gains one action.

The new action adds a single row at index ``m`` (right after the ``m`` old
payoff rows), so every old row index ``i >= m`` moves to ``i + 1``.  A stored
search path stays useful: its vertices that satisfy the new row are still
shadow vertices of the new LP, and the solve resumes from the best of them.
"""

from __future__ import annotations

import logging
import threading
from concurrent.futures import Executor, Future, ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleAtVertex, NoSolution, OptimumCutOff
from .lp import EPS, CanonicalLP, Solution, Vertex
from .simplex import (PathEntry, SearchPath, SearchTable, drifted, init_table, pivot_step, run_pivots,
                      solution_from_path, solve, table_from_active_set)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ExtensionEvent:
    old_lp: CanonicalLP
    new_lp: CanonicalLP
    old_solution: Solution
    old_path: SearchPath


@dataclass(eq=False)
class IterativeResult:
    solution: Solution
    path: SearchPath | None
    restart_index: int | None
    pivots_used: int
    retained: bool
    persistence_violations: int = 0


def _new_row(new_lp: CanonicalLP) -> int:
    return new_lp.normal_count - 1


def _shift(active_set, new_row):
    return tuple(i + 1 if i >= new_row else i for i in active_set)


def satisfies_new_row(x, new_lp: CanonicalLP, tol=EPS) -> bool:
    r = _new_row(new_lp)
    return bool(new_lp.A[r] @ np.asarray(x, dtype=float) <= new_lp.b[r] + tol)


def retains_optimality(old_solution: Solution, new_lp: CanonicalLP) -> bool:
    """True iff the old optimum satisfies the newly inserted constraint."""
    return satisfies_new_row(old_solution.x, new_lp)


def insert_constraint_row(table: SearchTable, new_lp: CanonicalLP) -> SearchTable:
    """Re-index an old-LP table for ``new_lp`` and add the new row's gamma/phi."""
    r = _new_row(new_lp)
    omega = _shift(table.active_set, r)
    A_om = new_lp.A[list(omega)]
    g_row = np.linalg.solve(A_om.T, new_lp.A[r])
    phi_r = float(new_lp.b[r] - g_row @ new_lp.b[list(omega)])
    if phi_r < -EPS:
        raise InfeasibleAtVertex(f"new row has slack {phi_r:.3g} at this vertex")
    return SearchTable(
        table.alpha.copy(), table.beta.copy(), table.Qc, table.Qu,
        np.insert(table.gamma, r, g_row, axis=0), np.insert(table.phi, r, phi_r),
        omega, table.u.copy(),
    )


def _augment(entry: PathEntry, new_lp: CanonicalLP) -> PathEntry:
    table = insert_constraint_row(entry.table, new_lp)
    return PathEntry(Vertex(entry.vertex.x, _shift(entry.vertex.active_set, _new_row(new_lp))), table)


def _feasible_prefix(old_path: SearchPath, new_lp: CanonicalLP) -> list:
    # front-to-back scan, stopping at the first vertex cut off by the new row
    prefix = []
    for entry in old_path.entries:
        if not satisfies_new_row(entry.vertex.x, new_lp):
            break
        try:
            prefix.append(_augment(entry, new_lp))
        except InfeasibleAtVertex:
            break
    return prefix


def _restart_run(old_path: SearchPath, new_lp: CanonicalLP):
    """Best surviving vertex of the old path and the feasible run leading to it.

    Normally the survivors form a prefix of the path and this is the last
    vertex of that prefix.  When a later vertex survives past a cut-off one,
    the restart moves to the survivor with the largest objective, keeping
    only the contiguous feasible stretch that ends there.
    """
    augmented = []
    for entry in old_path.entries:
        if not satisfies_new_row(entry.vertex.x, new_lp):
            augmented.append(None)
            continue
        try:
            augmented.append(_augment(entry, new_lp))
        except InfeasibleAtVertex:
            augmented.append(None)
    alive = [i for i, e in enumerate(augmented) if e is not None]
    if not alive:
        return None
    t = max(alive, key=lambda i: (float(new_lp.c @ old_path.entries[i].vertex.x), i))
    s = t
    while s > 0 and augmented[s - 1] is not None:
        s -= 1
    return t, augmented[s:t + 1]


def iterative_solve(event: ExtensionEvent, *, repair=True, rng=None, verify_every=None) -> IterativeResult:
    """Solve ``event.new_lp`` reusing the stored search path of the old LP.

    When the old optimum survives, no pivots are needed; with ``repair`` the
    stored path is repaired synchronously so it can seed the next extension.
    """
    new_lp = event.new_lp
    r = _new_row(new_lp)
    if retains_optimality(event.old_solution, new_lp):
        path = repair_path(event.old_path, new_lp) if repair else None
        return IterativeResult(event.old_solution, path, None, 0, True)

    run = _restart_run(event.old_path, new_lp)
    if not run:
        solution, path = solve(new_lp, rng=rng, verify_every=verify_every)
        return IterativeResult(solution, path, None, path.pivots, False)
    restart, prefix = run

    entries = list(prefix)
    status = run_pivots(new_lp, entries[-1].table, entries, verify_every=verify_every)
    if status != "optimal":
        raise NoSolution("the extended LP is unbounded above")
    violations = persistence_violations(entries[len(prefix):], r)
    if violations:
        log.warning("new constraint left the active set %d time(s) after entering", violations)
    path = SearchPath(entries, "optimal")
    return IterativeResult(solution_from_path(new_lp, path), path, restart,
                           len(entries) - len(prefix), False, violations)


def persistence_violations(fresh_entries, row) -> int:
    """Count breaches of "the new row enters at the first pivot and never leaves"."""
    if not fresh_entries:
        return 0
    violations = 0 if row in fresh_entries[0].active_set else 1
    entered = False
    for entry in fresh_entries:
        if row in entry.active_set:
            entered = True
        elif entered:
            violations += 1
    return violations


def repair_path(old_path: SearchPath, new_lp: CanonicalLP) -> SearchPath:
    """Rebuild the search path for ``new_lp`` when the old optimum survives.

    Keeps the feasible prefix, pivots from its last vertex until it meets a
    later vertex of the old path (same active set) or the optimum, then
    re-attaches the old tail with augmented tables.  If even the first vertex
    is cut off, the pivots start from the new LP's initial vertex instead.
    """
    if not satisfies_new_row(old_path.last.vertex.x, new_lp):
        raise OptimumCutOff("the old optimum violates the new constraint")
    old = old_path.entries
    entries = _feasible_prefix(old_path, new_lp)
    if len(entries) == len(old):
        return SearchPath(entries, old_path.status)
    pos = len(entries) - 1
    if not entries:
        # even the starting vertex is cut off: start afresh, but still rejoin the old path
        table, vertex = init_table(new_lp)
        entries = [PathEntry(vertex, table)]

    r = _new_row(new_lp)
    where = {frozenset(_shift(e.active_set, r)): j for j, e in enumerate(old)}
    table = entries[-1].table
    while True:
        outcome = pivot_step(table, new_lp)
        if outcome.kind == "optimal":
            break
        if outcome.kind == "no_solution":
            raise NoSolution("the extended LP is unbounded above")
        table = outcome.table
        if drifted(table, new_lp):
            table = table_from_active_set(new_lp, table.active_set, table.u)
        x = np.linalg.solve(new_lp.A[list(table.active_set)], new_lp.b[list(table.active_set)])
        entries.append(PathEntry(Vertex(x, table.active_set), table))
        j = where.get(frozenset(table.active_set))
        if j is None or j <= pos:
            continue
        k = j + 1
        while k < len(old):
            if not satisfies_new_row(old[k].vertex.x, new_lp):
                break
            try:
                entries.append(_augment(old[k], new_lp))
            except InfeasibleAtVertex:
                break
            k += 1
        if k == len(old):
            break
        pos = k - 1
        table = entries[-1].table
    return SearchPath(entries, "optimal")


class PathHandle:
    """Holds the current search path; a background repair swaps it atomically."""

    def __init__(self, path: SearchPath):
        self._path = path
        self._lock = threading.Lock()

    @property
    def path(self) -> SearchPath:
        with self._lock:
            return self._path

    def publish(self, path: SearchPath) -> None:
        with self._lock:
            self._path = path

    def repair_async(self, new_lp: CanonicalLP, executor: Executor | None = None) -> Future:
        old = self.path

        def job():
            repaired = repair_path(old, new_lp)
            self.publish(repaired)
            return repaired

        if executor is not None:
            return executor.submit(job)
        pool = ThreadPoolExecutor(max_workers=1)
        future = pool.submit(job)
        pool.shutdown(wait=False)
        return future
