"""Command-line front end.

Exit codes: 0 success, 1 verification found problems, 2 bad input or usage,
3 solver failure, 4 stale or corrupt state file.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import analysis, pathio, scenario
from .errors import InvalidInput, ParseError, ShadowGameError, StaleState
from .incremental import ExtensionEvent, iterative_solve
from .lp import canonicalize, extend_with_action, read_payoff
from .simplex import check_path, solution_from_path, solve

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_SOLVER, EXIT_STATE = 0, 1, 2, 3, 4


def fmt(v) -> str:
    v = float(v)
    return format(0.0 if abs(v) < 1e-12 else v, ".10g")


def fmt_vec(vs) -> str:
    return " ".join(fmt(v) for v in vs)


def _fail(code: int, msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def read_column(path) -> np.ndarray:
    with open(path) as fh:
        toks = fh.read().split()
    try:
        g = np.array([float(t) for t in toks])
    except ValueError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    if g.size == 0 or not np.all(np.isfinite(g)):
        raise InvalidInput(f"{path}: expected finite numbers")
    return g


def cmd_solve(args) -> int:
    try:
        G = read_payoff(args.matrix)
    except (OSError, InvalidInput) as exc:
        return _fail(EXIT_INPUT, str(exc))
    lp = canonicalize(G)
    try:
        sol, path = solve(lp, rng=np.random.default_rng(args.seed))
    except ShadowGameError as exc:
        return _fail(EXIT_SOLVER, f"{type(exc).__name__}: {exc}")
    print(f"value {fmt(sol.value)}")
    print(f"strategy {fmt_vec(sol.strategy)}")
    print(f"pivots {path.pivots}")
    if args.state:
        try:
            pathio.save_path(path, lp, args.state, payoff=G)
        except OSError as exc:
            return _fail(EXIT_INPUT, str(exc))
    return EXIT_OK


def cmd_extend(args) -> int:
    try:
        G, lp, path = pathio.load_state(args.state)
    except OSError as exc:
        return _fail(EXIT_INPUT, str(exc))
    except (StaleState, InvalidInput) as exc:
        return _fail(EXIT_STATE, str(exc))
    if path.status != "optimal":
        return _fail(EXIT_STATE, "state does not end at an optimum")
    try:
        if args.matrix is not None and canonicalize(read_payoff(args.matrix)).digest() != lp.digest():
            return _fail(EXIT_STATE, "state was written for a different game")
        g = read_column(args.column)
        if g.shape != (G.shape[0],):
            raise InvalidInput(f"column has {g.size} entries, the game has {G.shape[0]} rows")
    except (OSError, InvalidInput) as exc:
        return _fail(EXIT_INPUT, str(exc))
    new_lp = extend_with_action(lp, g)
    try:
        res = iterative_solve(ExtensionEvent(lp, new_lp, solution_from_path(lp, path), path),
                              rng=np.random.default_rng(args.seed))
    except ShadowGameError as exc:
        return _fail(EXIT_SOLVER, f"{type(exc).__name__}: {exc}")
    print("retained" if res.retained else "recomputed")
    print(f"pivots {res.pivots_used}")
    print(f"value {fmt(res.solution.value)}")
    print(f"strategy {fmt_vec(res.solution.strategy)}")
    if args.out:
        try:
            pathio.save_path(res.path, new_lp, args.out, payoff=np.column_stack([G, g]))
        except OSError as exc:
            return _fail(EXIT_INPUT, str(exc))
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg = analysis.ExperimentConfig(n=args.n, m_list=tuple(args.m), trials=args.trials,
                                        payoff_low=args.low, payoff_high=args.high, seed=args.seed,
                                        perturbation=not args.no_perturb, workers=args.workers)
    except InvalidInput as exc:
        return _fail(EXIT_INPUT, str(exc))
    records = analysis.run_growth_experiment(cfg)
    try:
        analysis.write_records_csv(records, args.out)
    except OSError as exc:
        return _fail(EXIT_INPUT, str(exc))
    for r in records:
        print(f"m {r.m} trials {r.trials} changes {r.change_count} empirical_p {fmt(r.empirical_change_prob)} "
              f"theory_p {fmt(r.theory_change_prob)} piv_iter {fmt(r.mean_pivots_iterative)} "
              f"piv_full {fmt(r.mean_pivots_full)} failed {r.failed}")
    return EXIT_OK


def _print_scenario(state) -> None:
    print(f"value {fmt(state.value)}")
    for idx, ((u, v), p) in enumerate(zip(state.graph.edges, state.solution.strategy)):
        print(f"edge {idx} {u} {v} {fmt(p)}")


def cmd_scenario(args) -> int:
    try:
        graph = scenario.load_graph_file(args.graph)
    except (OSError, ParseError) as exc:
        return _fail(EXIT_INPUT, str(exc))
    try:
        state = scenario.solve_checkpoint_game(graph, seed=args.seed)
    except InvalidInput as exc:
        return _fail(EXIT_INPUT, str(exc))
    except ShadowGameError as exc:
        return _fail(EXIT_SOLVER, f"{type(exc).__name__}: {exc}")
    _print_scenario(state)
    for node in args.add_target or []:
        try:
            scenario.add_target(state, node)
        except (ParseError, InvalidInput) as exc:
            return _fail(EXIT_INPUT, str(exc))
        except ShadowGameError as exc:
            return _fail(EXIT_SOLVER, f"{type(exc).__name__}: {exc}")
        print(f"add-target {node} {'retained' if all(state.retained) else 'recomputed'} "
              f"paths {len(state.retained)} pivots {state.pivots}")
        _print_scenario(state)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(f"value {fmt(state.value)}\n")
                for idx, p in enumerate(state.solution.strategy):
                    fh.write(f"{idx} {fmt(p)}\n")
        except OSError as exc:
            return _fail(EXIT_INPUT, str(exc))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        _, lp, path = pathio.load_state(args.state)
    except OSError as exc:
        return _fail(EXIT_INPUT, str(exc))
    except (StaleState, InvalidInput) as exc:
        return _fail(EXIT_STATE, str(exc))
    issues = check_path(path, lp)
    for msg in issues:
        print(msg)
    if issues:
        return EXIT_VERIFY
    print(f"ok {len(path.entries)} entries")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shadowgame", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a matrix game and optionally save its search path")
    s.add_argument("matrix")
    s.add_argument("--state", help="write the search-path state file here")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("extend", help="add one opponent column to a saved game")
    s.add_argument("state")
    s.add_argument("column", help="file with the n entries of the new column")
    s.add_argument("--out", help="write the updated state here")
    s.add_argument("--matrix", help="reject the state unless it belongs to this game")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_extend)

    s = sub.add_parser("simulate", help="run the random growth experiment and write a CSV")
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--m", type=int, nargs="+", default=[100])
    s.add_argument("--trials", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--low", type=int, default=-100)
    s.add_argument("--high", type=int, default=100)
    s.add_argument("--no-perturb", action="store_true")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("scenario", help="solve a checkpoint game on a graph")
    s.add_argument("graph")
    s.add_argument("--add-target", type=int, action="append", metavar="NODE")
    s.add_argument("--out", help="write value and per-edge probabilities here")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("verify", help="check every table of a saved search path")
    s.add_argument("state")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
