"""Repair of pseudo-marginals into the local polytope (or a slack polytope)
by per-edge transportation rounding, plus integral rounding of vertex blocks.

The per-edge primitive takes a nonnegative d x d matrix of unit mass and
target row/column sums of unit mass, and moves it into the transportation
polytope of those targets in three steps: scale down overfull rows, scale
down overfull columns, then spread the missing mass as a rank-one
nonnegative correction.  The total l1 movement is at most twice the initial
row-sum error plus twice the initial column-sum error, so near-consistent
inputs are barely disturbed.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .model import Model
from .objective import Marginals, _check_marginal_shapes

_MASS_TOL = 1e-10
_SKIP_CORRECTION = 1e-14


def round_to_transport(matrix, row_targets, col_targets) -> np.ndarray:
    """Move a unit-mass nonnegative matrix into the transportation polytope
    with the given row and column sums.

    Requires the matrix and both targets to have total mass 1 within 1e-10
    and the targets to be nonnegative; the output then matches the targets
    to ~1e-15 and stays entrywise nonnegative.
    """
    p = np.array(matrix, dtype=np.float64)
    r = np.asarray(row_targets, dtype=np.float64)
    c = np.asarray(col_targets, dtype=np.float64)
    d = p.shape[0]
    if p.shape != (d, d) or r.shape != (d,) or c.shape != (d,):
        raise ValidationError(
            f"expected a square matrix with matching targets, got {p.shape}, {r.shape}, {c.shape}"
        )
    if r.min() < -_MASS_TOL or c.min() < -_MASS_TOL:
        raise ValidationError("row/column targets must be nonnegative")
    for name, mass in (("matrix", p.sum()), ("row targets", r.sum()), ("column targets", c.sum())):
        if abs(mass - 1.0) > _MASS_TOL:
            raise ValidationError(f"{name} mass {mass} differs from 1 beyond {_MASS_TOL}")
    r = np.maximum(r, 0.0)
    c = np.maximum(c, 0.0)

    row_sums = p.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        scale = np.where(row_sums > 0.0, np.minimum(1.0, r / row_sums), 1.0)
    p *= scale[:, None]
    col_sums = p.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        scale = np.where(col_sums > 0.0, np.minimum(1.0, c / col_sums), 1.0)
    p *= scale[None, :]

    # Scaling never overshoots the targets, so both errors are nonnegative up
    # to roundoff; clamping keeps the rank-one correction sign-safe.
    err_r = np.maximum(r - p.sum(axis=1), 0.0)
    err_c = np.maximum(c - p.sum(axis=0), 0.0)
    missing = err_r.sum()
    if missing > _SKIP_CORRECTION:
        p += np.outer(err_r, err_c) / missing
    return p


def proj(model: Model, mu: Marginals, nu: np.ndarray | None = None) -> Marginals:
    """Project pseudo-marginals onto the local polytope (nu = None or 0) or
    onto the polytope whose per-edge consistency targets are offset by nu.

    Vertex blocks are returned untouched; each edge block is independently
    rounded to the transportation polytope of (mu_i + nu[e, 0],
    mu_j + nu[e, 1]).  Every offset target must be a distribution within
    1e-10 (automatic for recovered marginals with nu = 0).  With nu = 0 the
    output lies in the local polytope, and when mu was recovered from a dual
    point the total edge movement is at most twice the summed slack norms.
    """
    _check_marginal_shapes(model, mu)
    if nu is None:
        nu = np.zeros((model.m, 2, model.d))
    if nu.shape != (model.m, 2, model.d):
        raise ValidationError(
            f"slack offset has shape {nu.shape}, expected {(model.m, 2, model.d)}"
        )
    edge_out = np.empty_like(mu.edge)
    for e in range(model.m):
        i, j = model.edges[e]
        row_targets = mu.vertex[i] + nu[e, 0]
        col_targets = mu.vertex[j] + nu[e, 1]
        for name, t in (("row", row_targets), ("column", col_targets)):
            if t.min() < -_MASS_TOL or abs(t.sum() - 1.0) > _MASS_TOL:
                raise ValidationError(
                    f"edge {e}: offset {name} targets leave the simplex beyond {_MASS_TOL}"
                )
        edge_out[e] = round_to_transport(mu.edge[e], row_targets, col_targets)
    return Marginals(mu.vertex.copy(), edge_out)


def vertex_round(mu: Marginals) -> np.ndarray:
    """Integral assignment from vertex blocks: per-vertex argmax with ties
    broken toward the smallest label index."""
    return np.argmax(mu.vertex, axis=1).astype(np.int64)
