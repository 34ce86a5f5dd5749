import numpy as np
import pytest

from helpers import (
    minimize_block_coordinatewise,
    naive_emp_block,
    naive_smp_blocks,
    random_model,
)

import mapmp
from mapmp import (
    block_grad_step,
    block_slack,
    build_model,
    dual_objective,
    emp_update,
    slack,
    smp_update,
    star_slack,
    zero_dual,
)
from mapmp.errors import ValidationError


def zeros_model(n, edges, d):
    return build_model(n, edges, d, np.zeros((n, d)), np.zeros((len(edges), d, d)))


def install_block(model, lam, edge, vertex, block):
    out = lam.copy()
    slot = 0 if model.edges[edge, 0] == vertex else 1
    out[edge, slot] = block
    return out


def install_star(model, lam, vertex, blocks):
    out = lam.copy()
    out[model.incident_edges[vertex], model.incident_slots[vertex]] = blocks
    return out


class TestEmpUpdate:
    def test_fixed_point_at_uniform(self):
        m = zeros_model(2, [(0, 1)], 2)
        lam = zero_dual(m)
        np.testing.assert_allclose(emp_update(m, lam, 1.0, 0, 0), 0.0, atol=1e-12)

    def test_post_update_block_slack_vanishes(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = random_model(rng, 5, 3)
            lam = rng.normal(size=(m.m, 2, m.d))
            eta = float(rng.choice([1.0, 10.0, 100.0]))
            edge = int(rng.integers(m.m))
            vertex = int(m.edges[edge, rng.integers(2)])
            new = install_block(m, lam, edge, vertex, emp_update(m, lam, eta, edge, vertex))
            slot = 0 if m.edges[edge, 0] == vertex else 1
            assert np.abs(slack(m, new, eta)[edge, slot]).sum() <= 1e-8

    def test_matches_naive_formula(self):
        rng = np.random.default_rng(1)
        m = random_model(rng, 4, 3)
        lam = rng.normal(size=(m.m, 2, m.d)) * 0.5
        np.testing.assert_allclose(
            emp_update(m, lam, 3.0, 2, int(m.edges[2, 1])),
            naive_emp_block(m, lam, 3.0, 2, 1),
            atol=1e-12,
        )

    def test_matches_numeric_block_minimizer_up_to_gauge(self):
        # the dual is invariant to adding a constant to one block, so a
        # numeric minimizer can land anywhere on that line; compare centered
        rng = np.random.default_rng(2)
        m = random_model(rng, 2, 2, extra_edge_prob=0.0)
        lam = rng.normal(size=(m.m, 2, m.d)) * 0.3
        eta = 2.0
        closed = emp_update(m, lam, eta, 0, 0)
        numeric = minimize_block_coordinatewise(m, lam, eta, 0, 0, sweeps=40)
        np.testing.assert_allclose(
            closed - closed.mean(), numeric - numeric.mean(), atol=1e-6
        )
        installed = install_block(m, lam, 0, 0, closed)
        assert dual_objective(m, installed, eta) <= dual_objective(
            m, install_block(m, lam, 0, 0, numeric), eta
        ) + 1e-10

    def test_improvement_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            m = random_model(rng, 4, 3)
            lam = rng.normal(size=(m.m, 2, m.d))
            eta = float(rng.choice([1.0, 10.0]))
            edge = int(rng.integers(m.m))
            slot = int(rng.integers(2))
            vertex = int(m.edges[edge, slot])
            before = dual_objective(m, lam, eta)
            after = dual_objective(
                m,
                install_block(m, lam, edge, vertex, emp_update(m, lam, eta, edge, vertex)),
                eta,
            )
            bound = np.abs(slack(m, lam, eta)[edge, slot]).sum() ** 2 / (4.0 * eta)
            assert before - after >= bound - 1e-9

    def test_first_order_optimality_probe(self):
        rng = np.random.default_rng(4)
        m = random_model(rng, 4, 2)
        lam = rng.normal(size=(m.m, 2, m.d))
        eta = 5.0
        new = install_block(m, lam, 1, int(m.edges[1, 0]), emp_update(m, lam, eta, 1, int(m.edges[1, 0])))
        base = dual_objective(m, new, eta)
        for x in range(m.d):
            for sign in (1.0, -1.0):
                probe = new.copy()
                probe[1, 0, x] += sign * 1e-3
                assert dual_objective(m, probe, eta) >= base - 1e-12

    def test_fixed_point_of_all_blocks_is_primal_feasible(self):
        # dual optimality means the recovered point satisfies every local
        # consistency constraint
        rng = np.random.default_rng(40)
        m = random_model(rng, 5, 3)
        trace = mapmp.standard_mp(
            m, "emp", 10.0, 200_000, seed=0, stride=100, stop_slack_score=1e-20
        )
        assert trace.slack_scores[-1] <= 1e-20
        mu = mapmp.recover_primal(m, trace.final_lambda, 10.0)
        assert mapmp.in_local_polytope(m, mu, 1e-8)

    def test_rejects_non_endpoint(self):
        m = zeros_model(3, [(0, 1), (1, 2)], 2)
        with pytest.raises(ValidationError):
            emp_update(m, zero_dual(m), 1.0, 0, 2)


class TestSmpUpdate:
    def test_fixed_point_at_uniform(self):
        m = zeros_model(3, [(0, 1), (1, 2)], 2)
        lam = zero_dual(m)
        blocks = smp_update(m, lam, 1.0, 1)
        np.testing.assert_allclose(blocks, lam[m.incident_edges[1], m.incident_slots[1]], atol=1e-12)

    def test_degree_one_reduces_to_emp(self):
        rng = np.random.default_rng(5)
        m = random_model(rng, 4, 3, extra_edge_prob=0.0)  # a tree: leaves exist
        leaf = int(np.flatnonzero(m.degrees == 1)[0])
        lam = rng.normal(size=(m.m, 2, m.d))
        edge = int(m.incident_edges[leaf][0])
        blocks = smp_update(m, lam, 4.0, leaf)
        np.testing.assert_allclose(
            blocks[0], emp_update(m, lam, 4.0, edge, leaf), atol=1e-10
        )

    def test_star_fixed_point_on_random_stars(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            center_degree = 3
            edges = [(0, k + 1) for k in range(center_degree)]
            m = build_model(
                center_degree + 1,
                edges,
                3,
                rng.normal(size=(center_degree + 1, 3)),
                rng.normal(size=(center_degree, 3, 3)),
            )
            lam = rng.normal(size=(m.m, 2, m.d))
            eta = float(rng.choice([1.0, 10.0, 100.0]))
            new = install_star(m, lam, 0, smp_update(m, lam, eta, 0))
            nu = slack(m, new, eta)
            for e, s in zip(m.incident_edges[0], m.incident_slots[0]):
                assert np.abs(nu[e, s]).sum() <= 1e-6

    def test_matches_naive_formula(self):
        rng = np.random.default_rng(7)
        m = random_model(rng, 4, 2)
        lam = rng.normal(size=(m.m, 2, m.d)) * 0.3
        vertex = 1
        blocks = smp_update(m, lam, 2.0, vertex)
        naive = naive_smp_blocks(m, lam, 2.0, vertex)
        for t, (e, s) in enumerate(zip(m.incident_edges[vertex], m.incident_slots[vertex])):
            np.testing.assert_allclose(blocks[t], naive[(int(e), int(s))], atol=1e-12)

    def test_improvement_bound(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            m = random_model(rng, 4, 3)
            lam = rng.normal(size=(m.m, 2, m.d))
            eta = float(rng.choice([1.0, 10.0]))
            vertex = int(rng.integers(m.n))
            before = dual_objective(m, lam, eta)
            after = dual_objective(
                m, install_star(m, lam, vertex, smp_update(m, lam, eta, vertex)), eta
            )
            nu = slack(m, lam, eta)
            total = sum(
                np.abs(nu[e, s]).sum() ** 2
                for e, s in zip(m.incident_edges[vertex], m.incident_slots[vertex])
            )
            bound = total / (8.0 * m.degrees[vertex] * eta)
            assert before - after >= bound - 1e-9

    def test_first_order_optimality_probe(self):
        rng = np.random.default_rng(80)
        m = random_model(rng, 4, 3)
        lam = rng.normal(size=(m.m, 2, m.d))
        eta = 5.0
        vertex = 2
        new = install_star(m, lam, vertex, smp_update(m, lam, eta, vertex))
        base = dual_objective(m, new, eta)
        for e, s in zip(m.incident_edges[vertex], m.incident_slots[vertex]):
            for x in range(m.d):
                for sign in (1.0, -1.0):
                    probe = new.copy()
                    probe[e, s, x] += sign * 1e-3
                    assert dual_objective(m, probe, eta) >= base - 1e-12


class TestBlockGradStep:
    def test_zero_slack_is_identity(self):
        m = zeros_model(2, [(0, 1)], 2)
        lam = zero_dual(m)
        np.testing.assert_allclose(block_grad_step(m, lam, 1.0, 0, 0), 0.0, atol=1e-15)

    def test_zero_step_is_identity(self):
        rng = np.random.default_rng(9)
        m = random_model(rng, 3, 2)
        lam = rng.normal(size=(m.m, 2, m.d))
        np.testing.assert_array_equal(
            block_grad_step(m, lam, 1.0, 0, int(m.edges[0, 0]), step=0.0), lam[0, 0]
        )

    def test_default_step_never_increases_dual(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            m = random_model(rng, 4, 3)
            lam = rng.normal(size=(m.m, 2, m.d))
            eta = float(rng.choice([1.0, 10.0, 100.0]))
            edge = int(rng.integers(m.m))
            vertex = int(m.edges[edge, rng.integers(2)])
            stepped = install_block(
                m, lam, edge, vertex, block_grad_step(m, lam, eta, edge, vertex)
            )
            assert dual_objective(m, stepped, eta) <= dual_objective(m, lam, eta) + 1e-12

    def test_negative_step_rejected(self):
        m = zeros_model(2, [(0, 1)], 2)
        with pytest.raises(ValidationError):
            block_grad_step(m, zero_dual(m), 1.0, 0, 0, step=-0.1)


class TestLocality:
    def test_updates_touch_only_their_blocks(self):
        rng = np.random.default_rng(11)
        m = random_model(rng, 5, 3)
        lam = rng.normal(size=(m.m, 2, m.d))
        frozen = lam.copy()
        emp_update(m, lam, 2.0, 0, int(m.edges[0, 0]))
        smp_update(m, lam, 2.0, 3)
        block_grad_step(m, lam, 2.0, 1, int(m.edges[1, 1]))
        block_slack(m, lam, 2.0, 0, int(m.edges[0, 0]))
        star_slack(m, lam, 2.0, 2)
        np.testing.assert_array_equal(lam, frozen)

    def test_local_and_full_state_paths_agree(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            m = random_model(rng, 5, 3)
            lam = rng.normal(size=(m.m, 2, m.d))
            eta = float(rng.choice([1.0, 50.0]))
            nu_full = slack(m, lam, eta)
            edge = int(rng.integers(m.m))
            for slot in range(2):
                vertex = int(m.edges[edge, slot])
                np.testing.assert_allclose(
                    block_slack(m, lam, eta, edge, vertex), nu_full[edge, slot], atol=1e-12
                )
            vertex = int(rng.integers(m.n))
            local = star_slack(m, lam, eta, vertex)
            for t, (e, s) in enumerate(
                zip(m.incident_edges[vertex], m.incident_slots[vertex])
            ):
                np.testing.assert_allclose(local[t], nu_full[e, s], atol=1e-12)
