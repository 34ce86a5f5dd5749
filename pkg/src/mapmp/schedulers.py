"""Solver loops over the smoothed dual: randomized standard message passing,
Nesterov-style accelerated variants, gradient baselines, and the eta /
iteration budgeting formulas.

All loops start from lam = 0 and share one seeded sample stream per solve
(NumPy PCG64 via ``default_rng``).  Block sampling is pinned so that
independent re-implementations can reproduce a run exactly:

* (edge, endpoint) pairs are enumerated in canonical edge order with the
  smaller endpoint first, i.e. pair index p maps to edge p // 2, slot p % 2,
  and one ``rng.integers(2 m)`` draw selects a pair;
* vertices are drawn degree-proportionally by inverting the cumulative
  distribution at one ``rng.random()`` draw.

Standard loops install the exact block minimizer at the current iterate and
return the visited iterate with the smallest slack score (sum of squared
block l1 norms), tracked as a running minimum.  Accelerated loops maintain
the extrapolation point y = theta * v + (1 - theta) * lam, install the block
update evaluated at y, push a scaled slack step into v, and return the final
iterate.  The v-step uses the literal constants 1 / (2 m eta theta) for the
edge variant and min_deg / (2 p_i theta eta N) for the star variant;
``v_step_scale`` rescales them (0.5 gives the estimate-sequence constants
derived in the convergence analysis, which differ by a factor of 2).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ValidationError
from .model import Model
from .objective import dual_and_slack, slack_score, zero_dual
from .updates import block_grad_step, block_slack, emp_update, smp_update, star_slack

STANDARD_UPDATE_KINDS = ("emp", "smp", "bcd")


def theta_next(theta_prev: float) -> float:
    """Next extrapolation weight: the positive root of
    theta^2 = (1 - theta) * theta_prev^2.

    Evaluated in the cancellation-free form
    2 theta_prev / (theta_prev + sqrt(theta_prev^2 + 4)) so the defining
    identity holds to ~1e-15 even after 1e4 steps.  theta_prev = 1 gives the
    golden-ratio conjugate (sqrt(5) - 1) / 2.
    """
    tp = float(theta_prev)
    if not (0.0 < tp <= 1.0):
        raise ValidationError(f"theta_prev must lie in (0, 1], got {theta_prev}")
    return 2.0 * tp / (tp + math.sqrt(tp * tp + 4.0))


@dataclass
class ThetaState:
    """Running theta sequence with its decay product.

    ``delta`` is the product of (1 - theta_j) over all advances so far; after
    s advances it is bounded by 4 / (s + 2)^2 and is non-increasing.
    """

    theta_prev: float = 1.0
    delta: float = 1.0
    steps: int = 0

    def advance(self) -> float:
        theta = theta_next(self.theta_prev)
        self.theta_prev = theta
        self.delta *= 1.0 - theta
        self.steps += 1
        return theta


def eta_for_epsilon(m: int, n: int, d: int, epsilon: float) -> float:
    """Regularization strength making the smoothed problem epsilon-faithful:
    eta = 4 (m + n) log(d) / epsilon."""
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    return 4.0 * (m + n) * math.log(d) / epsilon


def eta_for_rounding(m: int, n: int, d: int, gap: float) -> float:
    """Regularization strength for exact rounding when the relaxation is
    tight with a unique optimum and suboptimality gap ``gap``:
    eta = 16 (m + n) (log(m + n) + log(d)) / gap."""
    if gap <= 0:
        raise ValidationError(f"gap must be positive, got {gap}")
    return 16.0 * (m + n) * (math.log(m + n) + math.log(d)) / gap


def dual_gap_constant(m: int, n: int, d: int, eta: float, cost_inf: float) -> float:
    """G(eta) = 24 m d (m + n) (sqrt(eta) ||C||_inf + log(d) / sqrt(eta)),
    the constant in the accelerated dual-gap bound G(eta)^2 / (k + 2)^2.
    Minimized over eta at eta = log(d) / ||C||_inf."""
    if eta <= 0:
        raise ValidationError(f"eta must be positive, got {eta}")
    root = math.sqrt(eta)
    return 24.0 * m * d * (m + n) * (root * cost_inf + math.log(d) / root)


def iteration_budget(
    m: int, n: int, d: int, eta: float, cost_inf: float, eps_prime: float
) -> int:
    """Iterations sufficient to drive expected block slack norms below
    ``eps_prime``: ceil(sqrt(4 eta) G(eta) / eps_prime)."""
    if eps_prime <= 0:
        raise ValidationError(f"eps_prime must be positive, got {eps_prime}")
    g = dual_gap_constant(m, n, d, eta, cost_inf)
    return int(math.ceil(math.sqrt(4.0 * eta) * g / eps_prime))


@dataclass
class SolveTrace:
    """Result of one solve.

    Parallel arrays hold one entry per recorded iterate (iterate 0 and the
    final iterate are always recorded; in between, every ``stride``-th).
    ``best_lambda`` is the recorded iterate minimizing the slack score;
    ``solution`` is what the algorithm returns: the best iterate for the
    standard loops, the final iterate for the accelerated ones.
    """

    iterations: np.ndarray
    dual_values: np.ndarray
    slack_scores: np.ndarray
    elapsed_ms: np.ndarray
    final_lambda: np.ndarray
    best_lambda: np.ndarray
    best_iteration: int
    best_score: float
    solution: np.ndarray = field(repr=False, default=None)


class _Recorder:
    """Stride-based trace recording with running-minimum best tracking."""

    def __init__(self, model, eta, stride, observer):
        if stride < 1:
            raise ValidationError(f"stride must be >= 1, got {stride}")
        self.model = model
        self.eta = eta
        self.stride = stride
        self.observer = observer
        self.iters: list[int] = []
        self.duals: list[float] = []
        self.scores: list[float] = []
        self.ms: list[float] = []
        self.best_score = math.inf
        self.best_lambda = None
        self.best_iteration = -1
        self.t0 = time.perf_counter()

    def due(self, k: int, total: int) -> bool:
        return k == total or k % self.stride == 0

    def record(self, k: int, lam: np.ndarray) -> float:
        dual, nu = dual_and_slack(self.model, lam, self.eta)
        score = slack_score(nu)
        self.iters.append(k)
        self.duals.append(dual)
        self.scores.append(score)
        self.ms.append((time.perf_counter() - self.t0) * 1e3)
        if score < self.best_score:
            self.best_score = score
            self.best_lambda = lam.copy()
            self.best_iteration = k
        if self.observer is not None:
            self.observer(k, lam.copy())
        return score

    def finish(self, lam: np.ndarray, return_best: bool) -> SolveTrace:
        return SolveTrace(
            iterations=np.array(self.iters, dtype=np.int64),
            dual_values=np.array(self.duals),
            slack_scores=np.array(self.scores),
            elapsed_ms=np.array(self.ms),
            final_lambda=lam.copy(),
            best_lambda=self.best_lambda.copy(),
            best_iteration=self.best_iteration,
            best_score=self.best_score,
            solution=(self.best_lambda if return_best else lam).copy(),
        )


def _check_iters(iters: int) -> int:
    iters = int(iters)
    if iters < 0:
        raise ValidationError(f"iteration count must be >= 0, got {iters}")
    return iters


def _sample_pair(rng, m: int):
    pair = int(rng.integers(2 * m))
    return pair // 2, pair % 2


def _degree_cdf(model: Model) -> np.ndarray:
    return np.cumsum(model.degrees / model.degrees.sum())


def _sample_vertex(rng, cdf: np.ndarray) -> int:
    v = int(np.searchsorted(cdf, rng.random(), side="right"))
    return min(v, len(cdf) - 1)


def standard_mp(
    model: Model,
    update_kind: str,
    eta: float,
    iters: int,
    seed,
    *,
    stride: int = 1,
    stop_slack_score: float | None = None,
    observer: Callable[[int, np.ndarray], None] | None = None,
    debug_checks: bool = False,
) -> SolveTrace:
    """Randomized block-minimization loop from lam = 0.

    ``update_kind``: "emp" installs the edge-block minimizer at a uniformly
    sampled (edge, endpoint) pair; "smp" installs the star minimizer at a
    degree-proportionally sampled vertex; "bcd" takes a 1/eta gradient step
    on a uniformly sampled pair.  Returns the visited iterate with the
    smallest recorded slack score (ties keep the earliest).

    ``debug_checks`` re-evaluates the dual around every step and asserts the
    per-step improvement bounds (slow; for tests).
    """
    if update_kind not in STANDARD_UPDATE_KINDS:
        raise ValidationError(
            f"unknown update kind {update_kind!r}, expected one of {STANDARD_UPDATE_KINDS}"
        )
    iters = _check_iters(iters)
    rng = np.random.default_rng(seed)
    lam = zero_dual(model)
    cdf = _degree_cdf(model) if update_kind == "smp" else None
    rec = _Recorder(model, eta, stride, observer)
    score = rec.record(0, lam)
    if stop_slack_score is not None and score <= stop_slack_score:
        return rec.finish(lam, return_best=True)

    for k in range(iters):
        if update_kind == "smp":
            vertex = _sample_vertex(rng, cdf)
            if debug_checks:
                before = dual_and_slack(model, lam, eta)[0]
                bound = (
                    np.abs(star_slack(model, lam, eta, vertex)).sum(axis=1) ** 2
                ).sum() / (8.0 * model.degrees[vertex] * eta)
            blocks = smp_update(model, lam, eta, vertex)
            lam[model.incident_edges[vertex], model.incident_slots[vertex]] = blocks
        else:
            edge, slot = _sample_pair(rng, model.m)
            vertex = int(model.edges[edge, slot])
            if debug_checks:
                before = dual_and_slack(model, lam, eta)[0]
                nu_block = block_slack(model, lam, eta, edge, vertex)
                bound = np.abs(nu_block).sum() ** 2 / (4.0 * eta)
            if update_kind == "emp":
                lam[edge, slot] = emp_update(model, lam, eta, edge, vertex)
            else:
                lam[edge, slot] = block_grad_step(model, lam, eta, edge, vertex)
        if debug_checks and update_kind != "bcd":
            after = dual_and_slack(model, lam, eta)[0]
            if not before - after >= bound - 1e-9:
                raise AssertionError(
                    f"improvement bound violated at iteration {k}: "
                    f"{before - after} < {bound}"
                )
        if rec.due(k + 1, iters):
            score = rec.record(k + 1, lam)
            if stop_slack_score is not None and score <= stop_slack_score:
                break
    return rec.finish(lam, return_best=True)


def _accel_pair_loop(
    model: Model,
    eta: float,
    iters: int,
    seed,
    block_update: Callable[[np.ndarray, int, int], np.ndarray],
    *,
    stride: int = 1,
    stop_slack_score: float | None = None,
    observer=None,
    v_step_scale: float = 1.0,
) -> SolveTrace:
    """Accelerated skeleton over uniformly sampled (edge, endpoint) pairs;
    ``block_update(y, edge, vertex)`` supplies the installed block."""
    iters = _check_iters(iters)
    rng = np.random.default_rng(seed)
    lam = zero_dual(model)
    v = zero_dual(model)
    theta_state = ThetaState()
    rec = _Recorder(model, eta, stride, observer)
    score = rec.record(0, lam)
    if stop_slack_score is not None and score <= stop_slack_score:
        return rec.finish(lam, return_best=False)

    for k in range(iters):
        theta = theta_state.advance()
        y = theta * v + (1.0 - theta) * lam
        edge, slot = _sample_pair(rng, model.m)
        vertex = int(model.edges[edge, slot])
        lam[edge, slot] = block_update(y, edge, vertex)
        nu_block = block_slack(model, y, eta, edge, vertex)
        v[edge, slot] += (
            v_step_scale / (2.0 * model.m * eta * theta)
        ) * nu_block
        if rec.due(k + 1, iters):
            score = rec.record(k + 1, lam)
            if stop_slack_score is not None and score <= stop_slack_score:
                break
    return rec.finish(lam, return_best=False)


def accel_emp(
    model: Model,
    eta: float,
    iters: int,
    seed,
    *,
    stride: int = 1,
    stop_slack_score: float | None = None,
    observer=None,
    v_step_scale: float = 1.0,
) -> SolveTrace:
    """Accelerated edge message passing: per iteration, extrapolate
    y = theta v + (1 - theta) lam, install the edge-block minimizer of y at
    a uniformly sampled pair into lam, and add the pair's slack at y, scaled
    by 1 / (2 m eta theta), into v.  Returns the final iterate."""

    def update(y, edge, vertex):
        return emp_update(model, y, eta, edge, vertex)

    return _accel_pair_loop(
        model,
        eta,
        iters,
        seed,
        update,
        stride=stride,
        stop_slack_score=stop_slack_score,
        observer=observer,
        v_step_scale=v_step_scale,
    )


def accel_block_grad(
    model: Model,
    eta: float,
    iters: int,
    seed,
    *,
    stride: int = 1,
    stop_slack_score: float | None = None,
    observer=None,
    v_step_scale: float = 1.0,
    step: float | None = None,
) -> SolveTrace:
    """Accelerated gradient baseline: the edge-message skeleton with the
    block minimizer replaced by a gradient step at y (default step 1/eta)."""

    def update(y, edge, vertex):
        return block_grad_step(model, y, eta, edge, vertex, step)

    return _accel_pair_loop(
        model,
        eta,
        iters,
        seed,
        update,
        stride=stride,
        stop_slack_score=stop_slack_score,
        observer=observer,
        v_step_scale=v_step_scale,
    )


def accel_smp(
    model: Model,
    eta: float,
    iters: int,
    seed,
    *,
    stride: int = 1,
    stop_slack_score: float | None = None,
    observer=None,
    v_step_scale: float = 1.0,
) -> SolveTrace:
    """Accelerated star message passing.

    Samples a vertex with probability degree / (2 m), installs the star
    minimizer of y at that vertex into lam, and adds each incident slack
    block at y, scaled by min_deg / (2 p_i theta eta N) with N = 2 m, into v.
    Returns the final iterate.
    """
    iters = _check_iters(iters)
    rng = np.random.default_rng(seed)
    lam = zero_dual(model)
    v = zero_dual(model)
    theta_state = ThetaState()
    cdf = _degree_cdf(model)
    n_total = float(model.degrees.sum())
    min_deg = float(model.degrees.min())
    rec = _Recorder(model, eta, stride, observer)
    score = rec.record(0, lam)
    if stop_slack_score is not None and score <= stop_slack_score:
        return rec.finish(lam, return_best=False)

    for k in range(iters):
        theta = theta_state.advance()
        y = theta * v + (1.0 - theta) * lam
        vertex = _sample_vertex(rng, cdf)
        p_i = model.degrees[vertex] / n_total
        blocks = smp_update(model, y, eta, vertex)
        nu_star = star_slack(model, y, eta, vertex)
        ev = model.incident_edges[vertex]
        sv = model.incident_slots[vertex]
        lam[ev, sv] = blocks
        v[ev, sv] += (
            v_step_scale * min_deg / (2.0 * p_i * theta * eta * n_total)
        ) * nu_star
        if rec.due(k + 1, iters):
            score = rec.record(k + 1, lam)
            if stop_slack_score is not None and score <= stop_slack_score:
                break
    return rec.finish(lam, return_best=False)
