"""Change-probability formula and the Monte Carlo growth experiment.

Each trial draws an ``n x m`` integer payoff matrix, solves it while recording
the search path, draws one extra opponent column and re-solves the extended
game both from scratch and with the warm-started solver.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InvalidInput, ShadowGameError
from .incremental import ExtensionEvent, iterative_solve
from .lp import canonicalize, extend_with_action
from .simplex import SearchPath, solve

JITTER = 1e-7
EXACT_LIMIT = 120
FLAT_STEP = 1e-12

CSV_HEADER = ["m", "trials", "changes", "empirical_p", "theory_p", "mean_piv_iter",
              "mean_piv_full", "mean_piv_iter_recompute", "mean_piv_full_recompute"]


def prob_change(n: int, m: int) -> float:
    """Probability that a new random column changes the security strategy.

    ``n / (m + 1 + n - (m + 1) / C(m + n, n))``; exact for ``n + m <= 120``,
    log-gamma for the binomial beyond that.
    """
    if n < 2 or m < 1:
        raise InvalidInput(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    if n + m <= EXACT_LIMIT:
        return float(Fraction(n) / (m + 1 + n - Fraction(m + 1, math.comb(m + n, n))))
    log_comb = math.lgamma(m + n + 1) - math.lgamma(n + 1) - math.lgamma(m + 1)
    return n / (m + 1 + n - (m + 1) * math.exp(-log_comb))


def expected_visit_ratio(n: int, m: int) -> float:
    """Expected ratio of warm-started to from-scratch shadow vertices; same factor as prob_change."""
    return prob_change(n, m)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 10
    m_list: tuple = (100,)
    trials: int = 500
    payoff_low: int = -100
    payoff_high: int = 100
    seed: int = 0
    perturbation: bool = True
    workers: int = 1
    verify_every: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInput("n must be at least 2")
        if not self.m_list or any(int(m) < 1 for m in self.m_list):
            raise InvalidInput("m_list must hold positive sizes")
        if self.trials < 1:
            raise InvalidInput("trials must be at least 1")
        if self.payoff_low >= self.payoff_high:
            raise InvalidInput("payoff_low must be below payoff_high")
        if self.seed < 0:
            raise InvalidInput("seed must be non-negative")


@dataclass
class TrialOutcome:
    ok: bool
    changed: bool = False
    piv_iter: int = 0
    piv_full: int = 0
    flat_steps: int = 0
    check_failed: bool = False
    error: str = ""


@dataclass
class ExperimentRecord:
    m: int
    trials: int
    change_count: int
    empirical_change_prob: float
    theory_change_prob: float
    mean_pivots_iterative: float
    mean_pivots_full: float
    mean_pivots_iterative_given_recompute: float
    mean_pivots_full_given_recompute: float
    failed: int = 0
    check_failures: int = 0
    flat_steps: int = 0
    errors: list = field(default_factory=list)

    @property
    def recompute_count(self) -> int:
        return self.change_count


def trial_rng(seed: int, m: int, t: int) -> np.random.Generator:
    """Stream for trial ``t`` at size ``m``; independent of every other trial."""
    return np.random.default_rng([seed, m, t])


def sample_game(rng, n, m, low, high, perturbation=True):
    G = rng.integers(low, high + 1, size=(n, m)).astype(float)
    if perturbation:
        G += rng.uniform(-JITTER, JITTER, size=G.shape)
    return G


def flat_steps(path: SearchPath, start=0) -> int:
    """Pivots from entry ``start`` onward whose objective gain is at most 1e-12."""
    obj = np.asarray(path.objectives()[start:])
    return int(np.sum(np.diff(obj) <= FLAT_STEP)) if obj.size > 1 else 0


def run_trial(cfg: ExperimentConfig, m: int, t: int) -> TrialOutcome:
    rng = trial_rng(cfg.seed, m, t)
    G = sample_game(rng, cfg.n, m, cfg.payoff_low, cfg.payoff_high, cfg.perturbation)
    g = sample_game(rng, cfg.n, 1, cfg.payoff_low, cfg.payoff_high, cfg.perturbation)[:, 0]
    try:
        lp = canonicalize(G)
        sol, path = solve(lp, rng=rng, verify_every=cfg.verify_every)
        new_lp = extend_with_action(lp, g)
        res = iterative_solve(ExtensionEvent(lp, new_lp, sol, path), repair=False, rng=rng,
                              verify_every=cfg.verify_every)
        fresh, fresh_path = solve(new_lp, rng=rng, verify_every=cfg.verify_every)
    except ShadowGameError as exc:
        return TrialOutcome(False, error=f"{type(exc).__name__}: {exc}")
    flats = flat_steps(path) + flat_steps(fresh_path)
    check_failed = False
    if res.retained:
        # the retained optimum must still be feasible for the extended game
        check_failed = not new_lp.is_feasible(sol.x)
    else:
        # only the pivots taken after the restart are new
        flats += flat_steps(res.path, start=len(res.path.entries) - res.pivots_used - 1)
    return TrialOutcome(True, changed=not res.retained, piv_iter=res.pivots_used,
                        piv_full=fresh_path.pivots, flat_steps=flats, check_failed=check_failed)


def _trial_args(args):
    return run_trial(*args)


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else float("nan")


def aggregate(cfg: ExperimentConfig, m: int, outcomes) -> ExperimentRecord:
    ok = [o for o in outcomes if o.ok]
    changed = [o for o in ok if o.changed]
    return ExperimentRecord(
        m=m,
        trials=len(outcomes),
        change_count=len(changed),
        empirical_change_prob=len(changed) / len(ok) if ok else float("nan"),
        theory_change_prob=prob_change(cfg.n, m),
        mean_pivots_iterative=_mean([o.piv_iter for o in ok]),
        mean_pivots_full=_mean([o.piv_full for o in ok]),
        mean_pivots_iterative_given_recompute=_mean([o.piv_iter for o in changed]),
        mean_pivots_full_given_recompute=_mean([o.piv_full for o in changed]),
        failed=len(outcomes) - len(ok),
        check_failures=sum(o.check_failed for o in ok),
        flat_steps=sum(o.flat_steps for o in ok),
        errors=[o.error for o in outcomes if not o.ok],
    )


def run_growth_experiment(cfg: ExperimentConfig) -> list:
    """One record per ``m``; outcomes are folded in trial order, so workers do not change results."""
    records = []
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for m in cfg.m_list:
            m = int(m)
            args = [(cfg, m, t) for t in range(cfg.trials)]
            if pool is None:
                outcomes = [run_trial(*a) for a in args]
            else:
                outcomes = list(pool.map(_trial_args, args, chunksize=max(1, cfg.trials // (4 * cfg.workers))))
            records.append(aggregate(cfg, m, outcomes))
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if math.isnan(v):
        return "nan"
    return format(0.0 if abs(v) < 1e-300 else v, ".10g")


def record_row(r: ExperimentRecord) -> list:
    return [_fmt(r.m), _fmt(r.trials), _fmt(r.change_count), _fmt(r.empirical_change_prob),
            _fmt(r.theory_change_prob), _fmt(r.mean_pivots_iterative), _fmt(r.mean_pivots_full),
            _fmt(r.mean_pivots_iterative_given_recompute), _fmt(r.mean_pivots_full_given_recompute)]


def write_records_csv(records, destination) -> None:
    """Write the experiment CSV; OSError propagates when ``destination`` is unwritable."""
    records = list(records)
    if not records:
        raise InvalidInput("no records to write")
    with open(Path(destination), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(record_row(r))
