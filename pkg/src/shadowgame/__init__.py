"""Security strategies of matrix games via the shadow-vertex simplex method,
with warm-started updates when the opponent gains new actions."""

from .analysis import (ExperimentConfig, ExperimentRecord, expected_visit_ratio, prob_change,
                       run_growth_experiment, write_records_csv)
from .errors import (InfeasibleAtVertex, InvalidInput, InvalidTable, IterationLimit, NoNewPaths,
                     NoSolution, OptimumCutOff, ParseError, RetryExhausted, ShadowGameError,
                     SingularBasis, StaleState, TooLarge, TooManyPaths)
from .incremental import (ExtensionEvent, IterativeResult, PathHandle, insert_constraint_row,
                          iterative_solve, repair_path, retains_optimality)
from .lp import (CanonicalLP, Solution, Vertex, canonicalize, canonicalize_budgeted,
                 extend_with_action, recover_strategy, solve_oracle, vertex_from_active_set)
from .pathio import load_path, save_path
from .scenario import (ScenarioState, SecurityGraph, add_target, build_payoff,
                       enumerate_shortest_paths, load_graph, solve_checkpoint_game)
from .simplex import (AuxiliaryObjective, PivotOutcome, SearchPath, SearchTable, choose_auxiliary,
                      init_table, pivot_step, solve, verify_table)

__version__ = "0.1.0"
