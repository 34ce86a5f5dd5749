"""Shared test utilities: random instances and independent reference oracles.

The reference implementations here are deliberately naive (pure-Python loops,
plain softmax) so they share no code with the package's vectorized log-domain
kernels.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from mapmp import build_model
from mapmp.model import Model


def random_model(rng: np.random.Generator, n: int, d: int, extra_edge_prob: float = 0.5) -> Model:
    """Connected-ish random instance with standard-normal costs: a random
    spanning tree plus extra edges, so every vertex is covered."""
    edges = set()
    perm = rng.permutation(n)
    for a, b in zip(perm[:-1], perm[1:]):
        edges.add((min(a, b), max(a, b)))
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) not in edges and rng.random() < extra_edge_prob:
                edges.add((i, j))
    edge_list = sorted(edges)
    vc = rng.normal(size=(n, d))
    ec = rng.normal(size=(len(edge_list), d, d))
    return build_model(n, edge_list, d, vc, ec)


def random_cyclic_model(rng: np.random.Generator, n: int, d: int) -> Model:
    """Random instance guaranteed to contain a cycle."""
    while True:
        model = random_model(rng, n, d, extra_edge_prob=0.7)
        if model.m > model.n - 1:
            return model


def random_tree_edges(rng: np.random.Generator, n: int) -> list[tuple[int, int]]:
    """Uniform random labeled tree from a Prufer sequence."""
    if n == 2:
        return [(0, 1)]
    prufer = [int(rng.integers(0, n)) for _ in range(n - 2)]
    degree = [1] * n
    for v in prufer:
        degree[v] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in prufer:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u, w = sorted(leaves)[:2]
    edges.append((min(u, w), max(u, w)))
    return edges


def random_tree_potts(n: int, d: int, seed) -> Model:
    """Random tree with the benchmark cost distribution: tiny uniform vertex
    costs, +-1 edge costs."""
    rng = np.random.default_rng(seed)
    edges = random_tree_edges(rng, n)
    vc = rng.uniform(-0.01, 0.01, size=(n, d))
    ec = np.where(rng.random((len(edges), d, d)) < 0.5, -1.0, 1.0)
    return build_model(n, edges, d, vc, ec)


def random_tree_model(rng: np.random.Generator, n: int, d: int) -> Model:
    """Random tree with standard-normal costs."""
    edges = random_tree_edges(rng, n)
    return build_model(
        n, edges, d, rng.normal(size=(n, d)), rng.normal(size=(len(edges), d, d))
    )


def fd_gradient(model: Model, lam: np.ndarray, eta: float) -> np.ndarray:
    """Central finite differences of the dual objective, coordinate by
    coordinate, at step 1e-6 * (1 + |coordinate|)."""
    from mapmp import dual_objective

    grad = np.zeros_like(lam)
    for idx in np.ndindex(lam.shape):
        h = 1e-6 * (1.0 + abs(lam[idx]))
        plus = lam.copy()
        plus[idx] += h
        minus = lam.copy()
        minus[idx] -= h
        grad[idx] = (dual_objective(model, plus, eta) - dual_objective(model, minus, eta)) / (
            2.0 * h
        )
    return grad


# ---------------------------------------------------------------------------
# Naive reference: marginals, dual value, and slacks from first principles.
# ---------------------------------------------------------------------------


def naive_vertex_marginal(model: Model, lam, eta: float, i: int) -> list[float]:
    weights = []
    for x in range(model.d):
        expo = -eta * model.vertex_costs[i, x]
        for e in range(model.m):
            for slot in range(2):
                if model.edges[e, slot] == i:
                    expo += eta * lam[e, slot, x]
        weights.append(math.exp(expo))
    z = sum(weights)
    return [w / z for w in weights]


def naive_edge_joint(model: Model, lam, eta: float, e: int) -> list[list[float]]:
    weights = [
        [
            math.exp(
                -eta
                * (model.edge_costs[e, xi, xj] + lam[e, 0, xi] + lam[e, 1, xj])
            )
            for xj in range(model.d)
        ]
        for xi in range(model.d)
    ]
    z = sum(sum(row) for row in weights)
    return [[w / z for w in row] for row in weights]


def naive_dual(model: Model, lam, eta: float) -> float:
    total = 0.0
    for i in range(model.n):
        z = 0.0
        for x in range(model.d):
            expo = -eta * model.vertex_costs[i, x]
            for e in range(model.m):
                for slot in range(2):
                    if model.edges[e, slot] == i:
                        expo += eta * lam[e, slot, x]
            z += math.exp(expo)
        total += math.log(z)
    for e in range(model.m):
        z = 0.0
        for xi in range(model.d):
            for xj in range(model.d):
                z += math.exp(
                    -eta
                    * (model.edge_costs[e, xi, xj] + lam[e, 0, xi] + lam[e, 1, xj])
                )
        total += math.log(z)
    return total / eta


def naive_slack(model: Model, lam, eta: float) -> np.ndarray:
    nu = np.zeros((model.m, 2, model.d))
    for e in range(model.m):
        joint = naive_edge_joint(model, lam, eta, e)
        for slot in range(2):
            i = int(model.edges[e, slot])
            mu_i = naive_vertex_marginal(model, lam, eta, i)
            for x in range(model.d):
                if slot == 0:
                    s = sum(joint[x][xj] for xj in range(model.d))
                else:
                    s = sum(joint[xi][x] for xi in range(model.d))
                nu[e, slot, x] = s - mu_i[x]
    return nu


def naive_emp_block(model: Model, lam, eta: float, e: int, slot: int) -> np.ndarray:
    i = int(model.edges[e, slot])
    mu_i = naive_vertex_marginal(model, lam, eta, i)
    joint = naive_edge_joint(model, lam, eta, e)
    out = np.zeros(model.d)
    for x in range(model.d):
        if slot == 0:
            s = sum(joint[x][xj] for xj in range(model.d))
        else:
            s = sum(joint[xi][x] for xi in range(model.d))
        out[x] = lam[e, slot, x] + math.log(s / mu_i[x]) / (2.0 * eta)
    return out


def naive_smp_blocks(model: Model, lam, eta: float, i: int):
    """New blocks for every (edge, slot) incident to vertex i, as a dict."""
    mu_i = naive_vertex_marginal(model, lam, eta, i)
    incident = [
        (e, slot)
        for e in range(model.m)
        for slot in range(2)
        if model.edges[e, slot] == i
    ]
    s_values = {}
    for e, slot in incident:
        joint = naive_edge_joint(model, lam, eta, e)
        s_values[(e, slot)] = [
            sum(joint[x][xj] for xj in range(model.d))
            if slot == 0
            else sum(joint[xi][x] for xi in range(model.d))
            for x in range(model.d)
        ]
    deg = len(incident)
    blocks = {}
    for e, slot in incident:
        block = np.zeros(model.d)
        for x in range(model.d):
            log_prod = math.log(mu_i[x]) + sum(
                math.log(s_values[key][x]) for key in incident
            )
            block[x] = (
                lam[e, slot, x]
                + math.log(s_values[(e, slot)][x]) / eta
                - log_prod / (eta * (deg + 1))
            )
        blocks[(e, slot)] = block
    return blocks


# ---------------------------------------------------------------------------
# Straight-line transliterations of the accelerated loops.
# ---------------------------------------------------------------------------


def reference_accel_emp(model: Model, eta: float, iters: int, seed) -> tuple:
    """Independent re-implementation of the accelerated edge-message loop,
    sharing only the pinned sampling protocol (one integers(2m) draw per
    iteration)."""
    rng = np.random.default_rng(seed)
    lam = np.zeros((model.m, 2, model.d))
    v = np.zeros_like(lam)
    theta_prev = 1.0
    for _ in range(iters):
        theta = (-theta_prev**2 + math.sqrt(theta_prev**4 + 4 * theta_prev**2)) / 2.0
        y = theta * v + (1.0 - theta) * lam
        pair = int(rng.integers(2 * model.m))
        e, slot = pair // 2, pair % 2
        i = int(model.edges[e, slot])
        new_lam = lam.copy()
        new_lam[e, slot] = naive_emp_block(model, y, eta, e, slot)
        nu_block = naive_slack(model, y, eta)[e, slot]
        new_v = v.copy()
        new_v[e, slot] = v[e, slot] + nu_block / (2.0 * model.m * eta * theta)
        lam, v, theta_prev = new_lam, new_v, theta
    return lam, v


def reference_accel_smp(model: Model, eta: float, iters: int, seed) -> tuple:
    """Independent re-implementation of the accelerated star-message loop,
    sharing only the pinned sampling protocol (one random() draw inverted
    through the degree CDF per iteration)."""
    rng = np.random.default_rng(seed)
    lam = np.zeros((model.m, 2, model.d))
    v = np.zeros_like(lam)
    theta_prev = 1.0
    degrees = [0] * model.n
    for e in range(model.m):
        degrees[int(model.edges[e, 0])] += 1
        degrees[int(model.edges[e, 1])] += 1
    n_total = sum(degrees)
    min_deg = min(degrees)
    for _ in range(iters):
        theta = (-theta_prev**2 + math.sqrt(theta_prev**4 + 4 * theta_prev**2)) / 2.0
        y = theta * v + (1.0 - theta) * lam
        u = rng.random()
        acc = 0.0
        vertex = model.n - 1
        for i in range(model.n):
            acc += degrees[i] / n_total
            if u < acc:
                vertex = i
                break
        p_i = degrees[vertex] / n_total
        blocks = naive_smp_blocks(model, y, eta, vertex)
        nu_y = naive_slack(model, y, eta)
        new_lam = lam.copy()
        new_v = v.copy()
        for (e, slot), block in blocks.items():
            new_lam[e, slot] = block
            new_v[e, slot] = v[e, slot] + nu_y[e, slot] * (
                min_deg / (2.0 * p_i * theta * eta * n_total)
            )
        lam, v, theta_prev = new_lam, new_v, theta
    return lam, v


def shift_toward_uniform(mu_vertex: np.ndarray, delta: float, d: int) -> np.ndarray:
    """Analysis device used only in tests: mix vertex blocks with the uniform
    distribution, theta = d * delta, so that any slack offset of block l1
    norm at most delta keeps every target inside the simplex."""
    theta = d * delta
    return (1.0 - theta) * mu_vertex + theta / d


def minimize_block_coordinatewise(
    model: Model, lam: np.ndarray, eta: float, e: int, slot: int, sweeps: int = 60
) -> np.ndarray:
    """1-D coordinate-wise numeric minimization of the dual over one block,
    via scalar Brent searches; independent of the closed-form update."""
    from scipy.optimize import minimize_scalar

    from mapmp import dual_objective

    work = lam.copy()
    for _ in range(sweeps):
        for x in range(model.d):
            def f(t, x=x):
                work[e, slot, x] = t
                return dual_objective(model, work, eta)

            res = minimize_scalar(
                f, bracket=(work[e, slot, x] - 1.0, work[e, slot, x] + 1.0), method="brent"
            )
            work[e, slot, x] = res.x
    return work[e, slot].copy()
