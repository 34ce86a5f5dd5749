"""Exact small-scale references: exhaustive MAP, tree dynamic programming,
the exact linear program over the local polytope, and the integral
suboptimality gap.

These are test-tier oracles: dense arithmetic, clarity over speed, hard size
guards instead of approximation.  Enumeration is chunked but its result is
independent of the chunking.
"""

from __future__ import annotations

from collections import deque
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import OracleGuardError, ValidationError
from .model import Model, map_value
from .objective import Marginals, in_local_polytope

MAX_BRUTE_STATES = 10**7
MAX_LP_PRIMAL_DIM = 5000
_CHUNK = 200_000


class BruteForceResult(NamedTuple):
    assignment: np.ndarray
    value: float
    unique: bool


class TreeMapResult(NamedTuple):
    assignment: np.ndarray
    value: float


class LpResult(NamedTuple):
    marginals: Marginals
    value: float


def _check_brute_guard(model: Model) -> int:
    total = model.d**model.n
    if total > MAX_BRUTE_STATES:
        raise OracleGuardError(
            f"d^n = {total} states exceeds the exhaustive-search guard {MAX_BRUTE_STATES}"
        )
    return total


def _chunk_values(model: Model, start: int, stop: int) -> np.ndarray:
    """Objective values of assignments with lexicographic indices
    start..stop-1 (vertex 0 is the most significant digit)."""
    idx = np.arange(start, stop, dtype=np.int64)
    labels = np.empty((idx.size, model.n), dtype=np.int64)
    rest = idx
    for i in range(model.n - 1, -1, -1):
        labels[:, i] = rest % model.d
        rest = rest // model.d
    values = np.zeros(idx.size)
    for i in range(model.n):
        values += model.vertex_costs[i, labels[:, i]]
    for e in range(model.m):
        i, j = model.edges[e]
        values += model.edge_costs[e, labels[:, i], labels[:, j]]
    return values


def _index_to_assignment(model: Model, index: int) -> np.ndarray:
    labels = np.empty(model.n, dtype=np.int64)
    for i in range(model.n - 1, -1, -1):
        labels[i] = index % model.d
        index //= model.d
    return labels


def brute_force_map(model: Model) -> BruteForceResult:
    """Exhaustive minimum over all d^n assignments.

    Ties break toward the lexicographically smallest assignment, and
    ``unique`` reports whether exactly one assignment attains the optimum.
    Guarded at d^n <= 1e7.
    """
    total = _check_brute_guard(model)
    best_value = np.inf
    best_index = -1
    best_count = 0
    for start in range(0, total, _CHUNK):
        values = _chunk_values(model, start, min(start + _CHUNK, total))
        chunk_min = values.min()
        if chunk_min < best_value:
            best_value = chunk_min
            best_index = start + int(np.argmax(values == chunk_min))
            best_count = int((values == chunk_min).sum())
        elif chunk_min == best_value:
            best_count += int((values == chunk_min).sum())
    return BruteForceResult(
        _index_to_assignment(model, best_index), float(best_value), best_count == 1
    )


def gap_estimate(model: Model) -> float:
    """Suboptimality gap surrogate: second-best integral assignment value
    minus the optimum, valid where the relaxation is tight and integral
    vertices dominate (e.g. the tree test family).  Requires a unique
    optimum; scales linearly with the costs.
    """
    total = _check_brute_guard(model)
    best = np.inf
    best_count = 0
    second = np.inf
    for start in range(0, total, _CHUNK):
        values = _chunk_values(model, start, min(start + _CHUNK, total))
        chunk_min = values.min()
        if chunk_min < best:
            above = values[values > chunk_min]
            runner = above.min() if above.size else np.inf
            second = min(runner, best)
            best = chunk_min
            best_count = int((values == chunk_min).sum())
        else:
            if chunk_min == best:
                best_count += int((values == chunk_min).sum())
            above = values[values > best]
            if above.size:
                second = min(second, float(above.min()))
    if best_count != 1:
        raise ValidationError(
            f"suboptimality gap undefined: optimum is not unique "
            f"(attained by {best_count} assignments)"
        )
    return float(second - best)


def _forest_structure(model: Model):
    """Rooted traversal orders for each connected component; raises if the
    graph has a cycle."""
    neighbors: list[list[tuple[int, int]]] = [[] for _ in range(model.n)]
    for e in range(model.m):
        i, j = map(int, model.edges[e])
        neighbors[i].append((j, e))
        neighbors[j].append((i, e))
    parent = np.full(model.n, -1, dtype=np.int64)
    parent_edge = np.full(model.n, -1, dtype=np.int64)
    seen = np.zeros(model.n, dtype=bool)
    components = []
    for root in range(model.n):
        if seen[root]:
            continue
        order = [root]
        seen[root] = True
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w, e in neighbors[u]:
                if not seen[w]:
                    seen[w] = True
                    parent[w] = u
                    parent_edge[w] = e
                    order.append(w)
                    queue.append(w)
        components.append((root, order))
    if sum(len(order) for _, order in components) - len(components) != model.m:
        raise ValidationError("graph has a cycle; the tree oracle requires a forest")
    return components, parent, parent_edge


def tree_map(model: Model) -> TreeMapResult:
    """Exact MAP on a forest by min-sum dynamic programming.

    Matches the exhaustive optimum value on any forest; label ties break
    toward smaller indices during backtracking.
    """
    components, parent, parent_edge = _forest_structure(model)
    belief = model.vertex_costs.copy()
    assignment = np.zeros(model.n, dtype=np.int64)
    value = 0.0
    for root, order in components:
        for u in reversed(order):
            if u == root:
                continue
            p = parent[u]
            e = parent_edge[u]
            cost = model.edge_costs[e]
            pair = cost if model.edges[e, 0] == u else cost.T  # (x_u, x_p)
            belief[p] += (pair + belief[u][:, None]).min(axis=0)
        assignment[root] = int(np.argmin(belief[root]))
        value += float(belief[root].min())
        for u in order:
            if u == root:
                continue
            p = parent[u]
            e = parent_edge[u]
            cost = model.edge_costs[e]
            pair = cost if model.edges[e, 0] == u else cost.T
            assignment[u] = int(np.argmin(pair[:, assignment[p]] + belief[u]))
    return TreeMapResult(assignment, value)


def lp_solve_l2(model: Model) -> LpResult:
    """Exact solution of the local-polytope linear program
    min <C, mu> s.t. mu in L2, via the HiGHS simplex/dual-simplex solver.

    The returned point is certificate-checked: primal feasibility within
    1e-8 and a weak-duality match between the primal value and the
    equality multipliers within 1e-6.  Numerical failure raises instead of
    silently approximating.  Guarded at n d + m d^2 <= 5000.
    """
    if model.primal_dim > MAX_LP_PRIMAL_DIM:
        raise OracleGuardError(
            f"primal dimension {model.primal_dim} exceeds the LP guard {MAX_LP_PRIMAL_DIM}"
        )
    n, m, d = model.n, model.m, model.d
    nv = n * d
    cost = np.concatenate([model.vertex_costs.ravel(), model.edge_costs.ravel()])

    rows, cols, vals = [], [], []
    b = []
    row = 0
    for i in range(n):  # sum_x mu_i(x) = 1
        for x in range(d):
            rows.append(row)
            cols.append(i * d + x)
            vals.append(1.0)
        b.append(1.0)
        row += 1
    for e in range(m):
        i, j = map(int, model.edges[e])
        base = nv + e * d * d
        for xi in range(d):  # sum_xj mu_e(xi, xj) - mu_i(xi) = 0
            for xj in range(d):
                rows.append(row)
                cols.append(base + xi * d + xj)
                vals.append(1.0)
            rows.append(row)
            cols.append(i * d + xi)
            vals.append(-1.0)
            b.append(0.0)
            row += 1
        for xj in range(d):  # sum_xi mu_e(xi, xj) - mu_j(xj) = 0
            for xi in range(d):
                rows.append(row)
                cols.append(base + xi * d + xj)
                vals.append(1.0)
            rows.append(row)
            cols.append(j * d + xj)
            vals.append(-1.0)
            b.append(0.0)
            row += 1
    a_eq = sparse.coo_matrix((vals, (rows, cols)), shape=(row, nv + m * d * d))
    b_eq = np.array(b)

    res = linprog(cost, A_eq=a_eq.tocsr(), b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise ValidationError(f"LP oracle failed: {res.message}")
    mu = Marginals(
        res.x[:nv].reshape(n, d).copy(),
        res.x[nv:].reshape(m, d, d).copy(),
    )
    if not in_local_polytope(model, mu, tol=1e-8):
        raise ValidationError("LP oracle returned an infeasible point")
    dual_from_multipliers = float(b_eq @ res.eqlin.marginals)
    scale = 1.0 + abs(res.fun)
    if abs(dual_from_multipliers - res.fun) > 1e-6 * scale:
        raise ValidationError(
            f"LP duality check failed: primal {res.fun} vs dual {dual_from_multipliers}"
        )
    return LpResult(mu, float(res.fun))
