"""Closed-form block minimizers of the smoothed dual, plus a gradient step.

Each function evaluates the dual state only locally (the vertex's incident
blocks and the touched edge joints), returns freshly allocated block values,
and never mutates its input.  Schedulers exploit this: the accelerated loops
evaluate an update at an extrapolated point y and install the result into a
different iterate.

Edge message passing (EMP) minimizes the dual exactly over the single block
(e, i); the minimizer moves the block by log(S / mu_i) / (2 eta), after which
the refreshed marginal S_{e,i} equals mu_i on that block.  Star message
passing (SMP) minimizes jointly over all blocks incident to one vertex; its
closed form shifts block (e, i) by

    log S_{e,i} / eta  -  log(mu_i * prod_{e'} S_{e',i}) / (eta (deg_i + 1)),

which for deg_i = 1 reduces to the EMP move.  Log ratios are always formed
as differences of log-domain accumulators, never as quotients of
materialized probabilities.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .model import Model
from .objective import _check_eta, _lse


def _slot_of(model: Model, edge: int, vertex: int) -> int:
    edge = int(edge)
    if not (0 <= edge < model.m):
        raise ValidationError(f"edge index {edge} outside 0..{model.m - 1}")
    i, j = model.edges[edge]
    if vertex == i:
        return 0
    if vertex == j:
        return 1
    raise ValidationError(f"vertex {vertex} is not an endpoint of edge {edge}")


def _vertex_log_marginal(model: Model, lam: np.ndarray, eta: float, vertex: int):
    ev = model.incident_edges[vertex]
    sv = model.incident_slots[vertex]
    logits = eta * (lam[ev, sv].sum(axis=0) - model.vertex_costs[vertex])
    return logits - _lse(logits, axis=0)


def _edge_log_marginal(model: Model, lam: np.ndarray, eta: float, edge: int, slot: int):
    """log S_{e,i}: the normalized edge joint summed onto endpoint slot."""
    logits = -eta * (
        model.edge_costs[edge] + lam[edge, 0][:, None] + lam[edge, 1][None, :]
    )
    joint = logits - _lse(logits, axis=(0, 1))
    return _lse(joint, axis=1 - slot)


def block_slack(model: Model, lam: np.ndarray, eta: float, edge: int, vertex: int):
    """Slack block nu_{e,i} = S_{e,i} - mu_i computed from local state only."""
    eta = _check_eta(eta)
    slot = _slot_of(model, edge, vertex)
    log_s = _edge_log_marginal(model, lam, eta, edge, slot)
    log_mu = _vertex_log_marginal(model, lam, eta, vertex)
    return np.exp(log_s) - np.exp(log_mu)


def star_slack(model: Model, lam: np.ndarray, eta: float, vertex: int):
    """Slack blocks for every edge incident to ``vertex``, shape (deg, d),
    ordered like ``model.incident_edges[vertex]``."""
    eta = _check_eta(eta)
    log_mu = _vertex_log_marginal(model, lam, eta, vertex)
    ev = model.incident_edges[vertex]
    sv = model.incident_slots[vertex]
    out = np.empty((len(ev), model.d))
    for t, (e, s) in enumerate(zip(ev, sv)):
        out[t] = np.exp(_edge_log_marginal(model, lam, eta, int(e), int(s)))
    return out - np.exp(log_mu)[None, :]


def emp_update(model: Model, lam: np.ndarray, eta: float, edge: int, vertex: int):
    """Exact minimizer of the dual over block (edge, vertex), as a new block:

        lam'[x] = lam[x] + (log S_{e,i}(x) - log mu_i(x)) / (2 eta)
    """
    eta = _check_eta(eta)
    slot = _slot_of(model, edge, vertex)
    log_s = _edge_log_marginal(model, lam, eta, edge, slot)
    log_mu = _vertex_log_marginal(model, lam, eta, vertex)
    return lam[edge, slot] + (log_s - log_mu) / (2.0 * eta)


def smp_update(model: Model, lam: np.ndarray, eta: float, vertex: int):
    """Exact joint minimizer over all blocks incident to ``vertex``.

    Returns an array of shape (deg, d) ordered like
    ``model.incident_edges[vertex]``; after installing all rows, every
    incident slack block vanishes simultaneously.
    """
    eta = _check_eta(eta)
    ev = model.incident_edges[vertex]
    sv = model.incident_slots[vertex]
    deg = len(ev)
    log_mu = _vertex_log_marginal(model, lam, eta, vertex)
    log_s = np.empty((deg, model.d))
    for t, (e, s) in enumerate(zip(ev, sv)):
        log_s[t] = _edge_log_marginal(model, lam, eta, int(e), int(s))
    shared = (log_mu + log_s.sum(axis=0)) / (eta * (deg + 1))
    return lam[ev, sv] + log_s / eta - shared[None, :]


def block_grad_step(
    model: Model,
    lam: np.ndarray,
    eta: float,
    edge: int,
    vertex: int,
    step: float | None = None,
):
    """Gradient step on block (edge, vertex): lam' = lam + step * nu.

    The dual gradient on the block is -nu, so this descends.  ``step``
    defaults to 1/eta; step = 0 is permitted and returns the block unchanged.
    """
    eta = _check_eta(eta)
    if step is None:
        step = 1.0 / eta
    if step < 0:
        raise ValidationError(f"step must be nonnegative, got {step}")
    slot = _slot_of(model, edge, vertex)
    return lam[edge, slot] + step * block_slack(model, lam, eta, edge, vertex)
