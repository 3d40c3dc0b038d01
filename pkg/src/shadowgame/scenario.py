"""Checkpoint placement on a road graph.

The defender spreads an expected ``B`` checkpoints over the edges
(``0 <= xbar_e <= 1``, ``sum xbar_e = B``); each attacker walks a shortest
path from a source to a target.  The payoff is the expected number of
checkpoints on the chosen path, so the game matrix is the edge-by-path
incidence matrix.

Incidence data is highly degenerate, so the solver works on a copy of the LP
whose right-hand side is relaxed by tiny positive amounts; the final basis is
then evaluated on the exact LP, which gives exact values at integer data.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import InvalidInput, NoNewPaths, NoSolution, ParseError, TooManyPaths
from .incremental import ExtensionEvent, iterative_solve, satisfies_new_row
from .lp import (CanonicalLP, Solution, canonicalize_budgeted, extend_with_action, relax_budgeted,
                 with_rhs)
from .simplex import SearchPath, solve

PATH_CAP = 10_000
RELAX = 1e-6


@dataclass(frozen=True)
class SecurityGraph:
    nodes: int
    edges: tuple
    sources: tuple
    targets: tuple
    budget: float

    def nx_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.nodes))
        for idx, (u, v) in enumerate(self.edges):
            g.add_edge(u, v, index=idx)
        return g


@dataclass(frozen=True)
class AttackPath:
    edges: frozenset
    source: int
    target: int


def _node(tok, nodes, line):
    try:
        v = int(tok)
    except ValueError:
        raise ParseError(f"node id {tok!r} is not an integer", line) from None
    if not 0 <= v < nodes:
        raise ParseError(f"node {v} outside 0..{nodes - 1}", line)
    return v


def load_graph(text: str) -> SecurityGraph:
    """Parse the graph format; ParseError carries the offending line number."""
    nodes = budget = None
    edges, sources, targets = [], [], []
    seen = set()
    lines = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if nodes is None:
            if len(tok) != 4 or tok[0] != "nodes" or tok[2] != "budget":
                raise ParseError("expected 'nodes <N> budget <B>'", no)
            try:
                nodes, budget = int(tok[1]), float(tok[3])
            except ValueError:
                raise ParseError("bad node count or budget", no) from None
            if nodes < 1 or not np.isfinite(budget) or budget < 0:
                raise ParseError("node count must be positive and budget non-negative", no)
            continue
        kind = tok[0]
        if kind == "edge" and len(tok) == 3:
            u, v = _node(tok[1], nodes, no), _node(tok[2], nodes, no)
            if u == v:
                raise ParseError(f"self-loop on node {u}", no)
            key = frozenset((u, v))
            if key in seen:
                raise ParseError(f"duplicate edge {u}-{v}", no)
            seen.add(key)
            edges.append((u, v))
        elif kind in ("source", "target") and len(tok) == 2:
            v = _node(tok[1], nodes, no)
            (sources if kind == "source" else targets).append(v)
            if v in (targets if kind == "source" else sources):
                raise ParseError(f"node {v} is both a source and a target", no)
            lines[(kind, v)] = no
        else:
            raise ParseError(f"unrecognized line {line!r}", no)
    if nodes is None:
        raise ParseError("missing 'nodes <N> budget <B>' header", 1)
    if not sources or not targets:
        raise ParseError("graph needs at least one source and one target")
    if budget > len(edges):
        raise ParseError(f"budget {budget} exceeds the edge count {len(edges)}")
    graph = SecurityGraph(nodes, tuple(edges), tuple(dict.fromkeys(sources)),
                          tuple(dict.fromkeys(targets)), budget)
    g = graph.nx_graph()
    for t in graph.targets:
        if not any(nx.has_path(g, s, t) for s in graph.sources):
            raise ParseError(f"target {t} is unreachable from every source", lines[("target", t)])
    return graph


def load_graph_file(path) -> SecurityGraph:
    with open(path) as fh:
        return load_graph(fh.read())


def _paths_to(g: nx.Graph, sources, target, known: set, cap: int) -> list:
    out = []
    for s in sources:
        if not nx.has_path(g, s, target):
            continue
        found = []
        for nodes in nx.all_shortest_paths(g, s, target):
            es = frozenset(g.edges[a, b]["index"] for a, b in zip(nodes, nodes[1:]))
            if es not in known:
                known.add(es)
                found.append(AttackPath(es, s, target))
                if len(known) > cap:
                    raise TooManyPaths(f"more than {cap} shortest paths")
        out += sorted(found, key=lambda p: sorted(p.edges))
    return out


def enumerate_shortest_paths(graph: SecurityGraph, cap=PATH_CAP) -> list:
    """All minimum-hop source-to-target paths, as distinct edge sets."""
    g = graph.nx_graph()
    known = set()
    paths = []
    for t in graph.targets:
        paths += _paths_to(g, graph.sources, t, known, cap)
    return paths


def build_payoff(paths, edge_count: int) -> np.ndarray:
    if not paths:
        raise InvalidInput("no attack paths")
    G = np.zeros((edge_count, len(paths)))
    for j, p in enumerate(paths):
        G[sorted(p.edges), j] = 1.0
    return G


def _evaluate_exact(lp: CanonicalLP, path: SearchPath) -> Solution:
    """Optimum of ``lp`` at the basis the relaxed solve finished on."""
    omega = list(path.last.active_set)
    x = np.linalg.solve(lp.A[omega], lp.b[omega])
    if not lp.is_feasible(x, tol=1e-9 * (1.0 + lp.scale)):
        raise NoSolution("relaxed optimum does not carry over to the exact LP")
    return Solution.from_point(x, lp)


@dataclass
class ScenarioState:
    graph: SecurityGraph
    paths: list
    payoff: np.ndarray
    lp: CanonicalLP | None
    solution: Solution
    path: SearchPath | None = None
    work_lp: CanonicalLP | None = None
    work_solution: Solution | None = None
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    retained: list = field(default_factory=list)
    pivots: int = 0

    @property
    def value(self) -> float:
        return self.solution.value


def _zero_solution(edge_count: int) -> Solution:
    return Solution(None, 0.0, np.zeros(edge_count))


def solve_checkpoint_game(graph: SecurityGraph, seed=0) -> ScenarioState:
    paths = enumerate_shortest_paths(graph)
    G = build_payoff(paths, len(graph.edges))
    rng = np.random.default_rng(seed)
    if graph.budget == 0:
        return ScenarioState(graph, paths, G, None, _zero_solution(len(graph.edges)), rng=rng)
    lp = canonicalize_budgeted(G, graph.budget)
    work = relax_budgeted(lp, rng, RELAX)
    work_sol, path = solve(work, rng=rng)
    return ScenarioState(graph, paths, G, lp, _evaluate_exact(lp, path), path, work, work_sol, rng)


def add_target(state: ScenarioState, new_target: int) -> ScenarioState:
    """Add a target and update the solution one new path (column) at a time.

    ``state`` is updated in place and returned; on error it is left unchanged.
    """
    graph = state.graph
    if not isinstance(new_target, (int, np.integer)) or not 0 <= new_target < graph.nodes:
        raise ParseError(f"node {new_target!r} is not in the graph")
    if new_target in graph.sources:
        raise InvalidInput(f"node {new_target} is a source")
    if new_target in graph.targets:
        raise InvalidInput(f"node {new_target} is already a target")
    g = graph.nx_graph()
    if not any(nx.has_path(g, s, new_target) for s in graph.sources):
        raise ParseError(f"node {new_target} is unreachable from every source")
    known = {p.edges for p in state.paths}
    fresh = _paths_to(g, graph.sources, new_target, known, PATH_CAP)
    if not fresh:
        raise NoNewPaths(f"target {new_target} adds no new shortest paths")

    new_graph = SecurityGraph(graph.nodes, graph.edges, graph.sources,
                              graph.targets + (int(new_target),), graph.budget)
    paths = state.paths + fresh
    G = np.hstack([state.payoff, build_payoff(fresh, len(graph.edges))])
    if state.lp is None:
        state.graph, state.paths, state.payoff = new_graph, paths, G
        state.retained, state.pivots = [True] * len(fresh), 0
        return state

    rng = copy.deepcopy(state.rng)
    lp, work, path, sol = state.lp, state.work_lp, state.path, state.work_solution
    exact = state.solution
    retained, pivots = [], 0
    for p in fresh:
        col = build_payoff([p], len(graph.edges))[:, 0]
        lp = extend_with_action(lp, col)
        new_work = extend_with_action(work, col)
        r = new_work.normal_count - 1
        delta = RELAX * rng.uniform(0.5, 1.0)
        if satisfies_new_row(exact.x, lp):
            # the exact optimum survives; keep the relaxed one on the same side of the new row
            delta = max(delta, new_work.A[r] @ sol.x - new_work.b[r] + delta)
        b = new_work.b.copy()
        b[r] += delta
        new_work = with_rhs(new_work, b)
        res = iterative_solve(ExtensionEvent(work, new_work, sol, path), rng=rng)
        work, path, sol = new_work, res.path, res.solution
        exact = _evaluate_exact(lp, path)
        retained.append(res.retained)
        pivots += res.pivots_used
    state.graph, state.paths, state.payoff = new_graph, paths, G
    state.lp, state.work_lp, state.path, state.solution = lp, work, path, exact
    state.work_solution = sol
    state.rng, state.retained, state.pivots = rng, retained, pivots
    return state
