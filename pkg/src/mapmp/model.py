"""Pairwise MRF instances: validation, assignment costs, random benchmark models.

An instance is an undirected graph on vertices 0..n-1 with d labels per
vertex, a length-d cost vector per vertex, and a d x d cost matrix per edge.
Edges are stored canonically as (i, j) with i < j, sorted lexicographically,
and edge cost matrices are indexed (label of i, label of j).  That single
orientation is relied on everywhere else: endpoint "slot" 0 always means the
smaller endpoint and slot 1 the larger one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Model:
    """Validated instance. Immutable after construction; all arrays are
    read-only, so a model can be shared freely across threads.

    Use :func:`build_model` instead of instantiating directly.
    """

    n: int
    d: int
    edges: np.ndarray  # (m, 2) int64, rows (i, j) with i < j, sorted
    vertex_costs: np.ndarray  # (n, d) float64
    edge_costs: np.ndarray  # (m, d, d) float64, entry [e, x_i, x_j]
    degrees: np.ndarray  # (n,) int64, number of incident edges
    incident_edges: tuple  # per vertex: int64 array of incident edge indices
    incident_slots: tuple  # per vertex: int64 array of endpoint slots (0 or 1)

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @property
    def primal_dim(self) -> int:
        """Number of marginal coordinates: n*d + m*d^2."""
        return self.n * self.d + self.m * self.d * self.d

    @property
    def dual_dim(self) -> int:
        """Number of dual coordinates: one length-d block per (edge, endpoint)."""
        return 2 * self.m * self.d

    @property
    def cost_inf_norm(self) -> float:
        vmax = float(np.abs(self.vertex_costs).max()) if self.n else 0.0
        emax = float(np.abs(self.edge_costs).max()) if self.m else 0.0
        return max(vmax, emax)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_model(n, edges, d, vertex_costs, edge_costs) -> Model:
    """Validate inputs and assemble an immutable :class:`Model`.

    Edges may be supplied in either orientation; a pair given as (j, i) with
    j > i is flipped and its cost matrix transposed.  The edge list is then
    sorted lexicographically with the cost matrices permuted alongside.

    Rejects: d < 2, self-loops, duplicate edges, out-of-range endpoints,
    vertices without any incident edge, non-finite costs, and shape
    mismatches.
    """
    n = int(n)
    d = int(d)
    if n < 1:
        raise ValidationError(f"need at least one vertex, got n={n}")
    if d < 2:
        raise ValidationError(f"need at least two labels per vertex, got d={d}")

    vc = np.ascontiguousarray(vertex_costs, dtype=np.float64)
    if vc.shape != (n, d):
        raise ValidationError(
            f"vertex_costs has shape {vc.shape}, expected {(n, d)}"
        )

    edge_list = [(int(i), int(j)) for i, j in edges]
    m = len(edge_list)
    ec = np.ascontiguousarray(edge_costs, dtype=np.float64)
    if ec.shape != (m, d, d):
        raise ValidationError(
            f"edge_costs has shape {ec.shape}, expected {(m, d, d)}"
        )

    canon = np.empty((m, 2), dtype=np.int64)
    ec_canon = ec.copy()
    for k, (i, j) in enumerate(edge_list):
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"edge ({i}, {j}) has an endpoint outside 0..{n - 1}")
        if i == j:
            raise ValidationError(f"self-loop at vertex {i}")
        if i > j:
            i, j = j, i
            ec_canon[k] = ec_canon[k].T
        canon[k] = (i, j)

    order = np.lexsort((canon[:, 1], canon[:, 0]))
    canon = canon[order]
    ec_canon = ec_canon[order]
    for k in range(1, m):
        if canon[k, 0] == canon[k - 1, 0] and canon[k, 1] == canon[k - 1, 1]:
            raise ValidationError(
                f"duplicate edge ({canon[k, 0]}, {canon[k, 1]})"
            )

    if not np.isfinite(vc).all() or not np.isfinite(ec_canon).all():
        raise ValidationError("costs must be finite")

    degrees = np.zeros(n, dtype=np.int64)
    inc = [[] for _ in range(n)]
    for k in range(m):
        i, j = int(canon[k, 0]), int(canon[k, 1])
        degrees[i] += 1
        degrees[j] += 1
        inc[i].append((k, 0))
        inc[j].append((k, 1))
    isolated = np.flatnonzero(degrees == 0)
    if isolated.size:
        raise ValidationError(f"isolated vertex {int(isolated[0])} has no incident edge")

    incident_edges = tuple(
        _readonly(np.array([e for e, _ in pairs], dtype=np.int64)) for pairs in inc
    )
    incident_slots = tuple(
        _readonly(np.array([s for _, s in pairs], dtype=np.int64)) for pairs in inc
    )
    return Model(
        n=n,
        d=d,
        edges=_readonly(canon),
        vertex_costs=_readonly(vc),
        edge_costs=_readonly(ec_canon),
        degrees=_readonly(degrees),
        incident_edges=incident_edges,
        incident_slots=incident_slots,
    )


def check_assignment(model: Model, assignment) -> np.ndarray:
    """Coerce to an int64 label vector and validate length and label range."""
    labels = np.asarray(assignment)
    if labels.shape != (model.n,):
        raise ValidationError(
            f"assignment has shape {labels.shape}, expected ({model.n},)"
        )
    if not np.issubdtype(labels.dtype, np.integer):
        rounded = np.rint(labels)
        if not np.array_equal(rounded, labels):
            raise ValidationError("assignment labels must be integers")
        labels = rounded
    labels = labels.astype(np.int64)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= model.d:
        raise ValidationError(f"assignment labels must lie in 0..{model.d - 1}")
    return labels


def map_value(model: Model, assignment) -> float:
    """Total cost of an integral assignment: vertex costs plus edge costs."""
    labels = check_assignment(model, assignment)
    value = model.vertex_costs[np.arange(model.n), labels].sum()
    if model.m:
        xi = labels[model.edges[:, 0]]
        xj = labels[model.edges[:, 1]]
        value += model.edge_costs[np.arange(model.m), xi, xj].sum()
    return float(value)


def degree_stats(model: Model):
    """Per-vertex incident-edge counts, the maximum degree, and their sum N.

    N always equals 2m (each edge is counted at both endpoints).
    """
    degrees = model.degrees.copy()
    return degrees, int(degrees.max()), int(degrees.sum())


def erdos_renyi_potts(n: int, edge_prob: float, d: int, seed: int) -> Model:
    """Random Erdos-Renyi instance with multi-label Potts-style costs.

    Each unordered pair becomes an edge independently with probability
    ``edge_prob``.  Vertex costs are drawn uniformly from [-0.01, 0.01] and
    each edge cost entry uniformly from {-1.0, +1.0}.  Any vertex left
    isolated by the draw is repaired by attaching it to a uniformly random
    other vertex; repairs are part of the seeded stream, so the whole model
    is a deterministic function of (n, edge_prob, d, seed).

    Stream layout (PCG64 via ``numpy.random.default_rng``, documented so
    golden files stay portable): one uniform per vertex pair in
    lexicographic order, then one integer draw per repaired vertex in
    ascending order, then the (n, d) vertex-cost uniforms, then the
    (m, d, d) edge-sign uniforms with edges in canonical sorted order.
    """
    n = int(n)
    d = int(d)
    if n < 2:
        raise ValidationError(f"need n >= 2 vertices, got {n}")
    if not (0.0 < edge_prob <= 1.0):
        raise ValidationError(f"edge_prob must lie in (0, 1], got {edge_prob}")

    rng = np.random.default_rng(seed)
    edges = set()
    covered = np.zeros(n, dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.add((i, j))
                covered[i] = covered[j] = True
    for v in range(n):
        if not covered[v]:
            u = int(rng.integers(n - 1))
            if u >= v:
                u += 1
            edges.add((min(u, v), max(u, v)))
            covered[u] = covered[v] = True

    edge_list = sorted(edges)
    vc = rng.uniform(-0.01, 0.01, size=(n, d))
    ec = np.where(rng.random((len(edge_list), d, d)) < 0.5, -1.0, 1.0)
    return build_model(n, edge_list, d, vc, ec)
