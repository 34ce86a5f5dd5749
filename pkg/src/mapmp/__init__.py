"""Entropy-regularized MAP inference on pairwise discrete MRFs.

Solvers for the smoothed local-polytope relaxation (randomized edge/star
message passing and their Nesterov-accelerated variants), projection back
onto the local polytope with integral rounding, exact small-scale oracles,
serialization, and a benchmark harness.
"""

from .bench import BenchConfig, BenchResult, MetricRow, run_bench
from .errors import OracleGuardError, ValidationError
from .formats import emit_model, emit_uai, load_model, parse_uai
from .model import (
    Model,
    build_model,
    degree_stats,
    erdos_renyi_potts,
    map_value,
)
from .objective import (
    Marginals,
    dual_and_slack,
    dual_objective,
    entropy,
    in_local_polytope,
    in_slack_polytope,
    primal_objective,
    recover_primal,
    slack,
    slack_score,
    zero_dual,
)
from .oracle import brute_force_map, gap_estimate, lp_solve_l2, tree_map
from .projection import proj, round_to_transport, vertex_round
from .schedulers import (
    SolveTrace,
    ThetaState,
    accel_block_grad,
    accel_emp,
    accel_smp,
    dual_gap_constant,
    eta_for_epsilon,
    eta_for_rounding,
    iteration_budget,
    standard_mp,
    theta_next,
)
from .updates import block_grad_step, block_slack, emp_update, smp_update, star_slack

__version__ = "0.1.0"

__all__ = [
    "BenchConfig",
    "BenchResult",
    "Marginals",
    "MetricRow",
    "Model",
    "OracleGuardError",
    "SolveTrace",
    "ThetaState",
    "ValidationError",
    "accel_block_grad",
    "accel_emp",
    "accel_smp",
    "block_grad_step",
    "block_slack",
    "brute_force_map",
    "build_model",
    "degree_stats",
    "dual_and_slack",
    "dual_gap_constant",
    "dual_objective",
    "emit_model",
    "emit_uai",
    "emp_update",
    "entropy",
    "erdos_renyi_potts",
    "eta_for_epsilon",
    "eta_for_rounding",
    "gap_estimate",
    "in_local_polytope",
    "in_slack_polytope",
    "iteration_budget",
    "load_model",
    "lp_solve_l2",
    "map_value",
    "parse_uai",
    "primal_objective",
    "proj",
    "recover_primal",
    "round_to_transport",
    "run_bench",
    "slack",
    "slack_score",
    "smp_update",
    "standard_mp",
    "star_slack",
    "theta_next",
    "tree_map",
    "vertex_round",
    "zero_dual",
]
