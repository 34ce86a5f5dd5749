"""Benchmark harness: seeded multi-trial solves with per-iteration metrics,
CSV emission, and the standard-vs-accelerated competitive-ratio protocol.

One run solves a single instance (loaded from a file or generated) with one
algorithm, or with a standard/accelerated pair in ratio mode, over several
trials.  The instance is fixed across trials; only the solvers' sampling
streams vary, derived per (algorithm, trial) from the run seed via NumPy
``SeedSequence([seed, algorithm_index, trial])``.  Trials are independent
and rows are emitted in deterministic (algorithm, trial, iteration) order,
so a fixed config yields byte-identical CSV output.  For that reason the
``elapsed_ms`` column is 0 unless wall-clock timing is explicitly enabled,
which gives up reproducibility of that column.

Per recorded iteration the metrics are the dual value, the primal value of
the projected candidate <C, Proj(mu^lam, 0)>, its gap to a reference optimum
(the exact LP value when the instance is small enough or a supplied value;
empty otherwise), and the slack score.  The ratio summary reports, per
recorded iteration, the mean and standard deviation over trials of
log(standard gap / accelerated gap); trials where either gap is zero within
floating-point noise are left out, and the row is empty if none remain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OracleGuardError, ValidationError
from .model import Model, erdos_renyi_potts
from .objective import primal_objective, recover_primal
from .oracle import lp_solve_l2
from .projection import proj
from .schedulers import SolveTrace, accel_block_grad, accel_emp, accel_smp, standard_mp

ALGORITHMS = ("emp", "smp", "bcd", "accel-emp", "accel-smp", "accel-bcd")
RATIO_PAIR = {"emp": "accel-emp", "smp": "accel-smp", "bcd": "accel-bcd"}
METRIC_HEADER = (
    "trial",
    "iter",
    "algorithm",
    "dual_value",
    "projected_primal",
    "primal_gap",
    "slack_score",
    "elapsed_ms",
)
SUMMARY_HEADER = (
    "algorithm",
    "iter",
    "primal_mean",
    "primal_std",
    "gap_mean",
    "gap_std",
)
RATIO_HEADER = ("iter", "log_ratio_mean", "log_ratio_std", "trials_used")

_GAP_FLOOR = 1e-12


@dataclass
class BenchConfig:
    """One benchmark run. Provide either ``model_file`` or generation
    parameters (``n``, ``d``, optional ``edge_prob`` defaulting to the
    1.1 log(n) / n sparse regime)."""

    algorithm: str
    eta: float
    iters: int
    trials: int
    seed: int
    stride: int = 1
    model_file: str | None = None
    n: int | None = None
    d: int | None = None
    edge_prob: float | None = None
    ratio: bool = False
    opt_value: float | None = None
    timing: bool = False

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(
                f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}"
            )
        if self.ratio and self.algorithm not in RATIO_PAIR:
            raise ValidationError(
                "ratio mode pairs a standard algorithm with its accelerated "
                f"variant; got {self.algorithm!r}"
            )
        if not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if self.trials < 1:
            raise ValidationError(f"trials must be >= 1, got {self.trials}")
        if self.iters < 0:
            raise ValidationError(f"iters must be >= 0, got {self.iters}")
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")
        has_file = self.model_file is not None
        has_gen = self.n is not None or self.d is not None
        if has_file == has_gen:
            raise ValidationError(
                "provide exactly one instance source: a model file or (n, d)"
            )
        if has_gen and (self.n is None or self.d is None):
            raise ValidationError("generated instances need both n and d")


@dataclass
class MetricRow:
    trial: int
    iteration: int
    algorithm: str
    dual_value: float
    projected_primal: float
    primal_gap: float | None
    slack_score: float
    elapsed_ms: float


@dataclass
class SummaryRow:
    algorithm: str
    iteration: int
    primal_mean: float
    primal_std: float
    gap_mean: float | None
    gap_std: float | None


@dataclass
class RatioRow:
    iteration: int
    log_ratio_mean: float | None
    log_ratio_std: float | None
    trials_used: int


@dataclass
class BenchResult:
    config: BenchConfig
    model: Model
    opt_value: float | None
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    ratio_rows: list = field(default_factory=list)


def _resolve_model(config: BenchConfig) -> Model:
    if config.model_file is not None:
        from .formats import load_model

        with open(config.model_file, encoding="utf-8") as fh:
            return load_model(fh.read())
    edge_prob = config.edge_prob
    if edge_prob is None:
        edge_prob = 1.1 * math.log(config.n) / config.n
    return erdos_renyi_potts(config.n, edge_prob, config.d, config.seed)


def _resolve_opt_value(config: BenchConfig, model: Model) -> float | None:
    if config.opt_value is not None:
        return float(config.opt_value)
    try:
        return lp_solve_l2(model).value
    except OracleGuardError:
        return None


def _solver(name: str) -> Callable[..., SolveTrace]:
    if name == "emp":
        return lambda *a, **kw: standard_mp(a[0], "emp", *a[1:], **kw)
    if name == "smp":
        return lambda *a, **kw: standard_mp(a[0], "smp", *a[1:], **kw)
    if name == "bcd":
        return lambda *a, **kw: standard_mp(a[0], "bcd", *a[1:], **kw)
    return {"accel-emp": accel_emp, "accel-smp": accel_smp, "accel-bcd": accel_block_grad}[name]


def run_bench(config: BenchConfig) -> BenchResult:
    """Execute a benchmark run; see the module docstring for the protocol."""
    config.validate()
    model = _resolve_model(config)
    opt_value = _resolve_opt_value(config, model)
    algorithms = [config.algorithm]
    if config.ratio:
        algorithms.append(RATIO_PAIR[config.algorithm])

    result = BenchResult(config=config, model=model, opt_value=opt_value)
    per_alg_gaps: dict[str, list[list[float]]] = {}
    recorded_grid: dict[str, list[int]] = {}
    for alg in algorithms:
        alg_rows_by_trial = []
        for trial in range(config.trials):
            seed = np.random.SeedSequence(
                [config.seed, ALGORITHMS.index(alg), trial]
            )
            trial_rows: list[MetricRow] = []

            def observe(k: int, lam: np.ndarray) -> None:
                mu_hat = proj(model, recover_primal(model, lam, config.eta))
                primal = primal_objective(model, mu_hat)
                gap = None if opt_value is None else primal - opt_value
                trial_rows.append(
                    MetricRow(trial, k, alg, 0.0, primal, gap, 0.0, 0.0)
                )

            trace = _solver(alg)(
                model,
                config.eta,
                config.iters,
                seed,
                stride=config.stride,
                observer=observe,
            )
            for idx, row in enumerate(trial_rows):
                row.dual_value = float(trace.dual_values[idx])
                row.slack_score = float(trace.slack_scores[idx])
                row.elapsed_ms = float(trace.elapsed_ms[idx]) if config.timing else 0.0
            result.rows.extend(trial_rows)
            alg_rows_by_trial.append(trial_rows)

        iterations = [row.iteration for row in alg_rows_by_trial[0]]
        gaps_by_iter: list[list[float]] = [[] for _ in iterations]
        for pos, iteration in enumerate(iterations):
            primals = [rows[pos].projected_primal for rows in alg_rows_by_trial]
            gaps = [rows[pos].primal_gap for rows in alg_rows_by_trial]
            have_gaps = opt_value is not None
            result.summary.append(
                SummaryRow(
                    alg,
                    iteration,
                    float(np.mean(primals)),
                    float(np.std(primals)),
                    float(np.mean(gaps)) if have_gaps else None,
                    float(np.std(gaps)) if have_gaps else None,
                )
            )
            if have_gaps:
                gaps_by_iter[pos] = gaps
        per_alg_gaps[alg] = gaps_by_iter
        recorded_grid[alg] = iterations

    if config.ratio and opt_value is not None:
        standard, accel = algorithms
        if recorded_grid[standard] != recorded_grid[accel]:
            raise ValidationError("paired algorithms recorded different iteration grids")
        floor = _GAP_FLOOR * (1.0 + abs(opt_value))
        for pos, iteration in enumerate(recorded_grid[standard]):
            ratios = [
                math.log(gs / ga)
                for gs, ga in zip(per_alg_gaps[standard][pos], per_alg_gaps[accel][pos])
                if gs > floor and ga > floor
            ]
            if ratios:
                result.ratio_rows.append(
                    RatioRow(
                        iteration,
                        float(np.mean(ratios)),
                        float(np.std(ratios)),
                        len(ratios),
                    )
                )
            else:
                result.ratio_rows.append(RatioRow(iteration, None, None, 0))
    return result


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_csv(result: BenchResult) -> str:
    lines = [",".join(METRIC_HEADER)]
    for r in result.rows:
        lines.append(
            ",".join(
                _cell(v)
                for v in (
                    r.trial,
                    r.iteration,
                    r.algorithm,
                    r.dual_value,
                    r.projected_primal,
                    r.primal_gap,
                    r.slack_score,
                    r.elapsed_ms,
                )
            )
        )
    return "\n".join(lines) + "\n"


def summary_csv(result: BenchResult) -> str:
    lines = [",".join(SUMMARY_HEADER)]
    for r in result.summary:
        lines.append(
            ",".join(
                _cell(v)
                for v in (
                    r.algorithm,
                    r.iteration,
                    r.primal_mean,
                    r.primal_std,
                    r.gap_mean,
                    r.gap_std,
                )
            )
        )
    return "\n".join(lines) + "\n"


def ratio_csv(result: BenchResult) -> str:
    lines = [",".join(RATIO_HEADER)]
    for r in result.ratio_rows:
        lines.append(
            ",".join(
                _cell(v)
                for v in (r.iteration, r.log_ratio_mean, r.log_ratio_std, r.trials_used)
            )
        )
    return "\n".join(lines) + "\n"


def parse_metrics_csv(text: str) -> list[MetricRow]:
    """Parse a metrics CSV back into rows (inverse of :func:`metrics_csv`)."""
    lines = text.strip().splitlines()
    if not lines or tuple(lines[0].split(",")) != METRIC_HEADER:
        raise ValidationError("unexpected metrics CSV header")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(METRIC_HEADER):
            raise ValidationError(f"metrics CSV row has {len(cells)} cells")
        rows.append(
            MetricRow(
                trial=int(cells[0]),
                iteration=int(cells[1]),
                algorithm=cells[2],
                dual_value=float(cells[3]),
                projected_primal=float(cells[4]),
                primal_gap=None if cells[5] == "" else float(cells[5]),
                slack_score=float(cells[6]),
                elapsed_ms=float(cells[7]),
            )
        )
    return rows
