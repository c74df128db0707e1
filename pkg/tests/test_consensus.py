import numpy as np
import pytest
from numpy.testing import assert_allclose

from estimation.consensus import (
    ConsensusFilter,
    bound_coefficients,
    consensus_step,
    convergence_indicator,
)
from estimation.geometry import LocalGeometry
from formation.transforms import AffineTransform, rotation_2d, target_configuration
from graph.nominal import FunctionalGraph, functional_incidence, incidence_blocks

EPSILON = 0.05


def functional(graph, drop=(), inactive=(), step=0):
    nodes = np.ones(graph.n_nodes, dtype=bool)
    nodes[list(inactive)] = False
    mask = np.ones(graph.n_edges, dtype=bool)
    for edge in drop:
        mask[graph.edge_index[edge]] = False
    return FunctionalGraph(graph, step, nodes, mask)


def affine_image(framework, angle=0.3, translation=(2.0, -1.0)):
    transform = AffineTransform(rotation_2d(angle) @ np.diag([1.2, 0.8]), list(translation))
    return transform.theta, target_configuration(framework.nominal, transform)


class TestConsensusStep:
    def test_agreement_is_a_fixed_point(self):
        theta = np.array([[1.0, 0.5], [0.0, 2.0]])
        assert_allclose(consensus_step(theta, [theta, theta], [theta, theta], EPSILON), theta)

    def test_scalar_example(self):
        assert consensus_step(np.array(0.0), [np.array(1.0)], [np.array(1.0), np.array(3.0)], 0.1) == \
            pytest.approx(0.5)

    def test_no_messages(self):
        assert_allclose(consensus_step(np.eye(2), [], [], EPSILON), np.eye(2))


class TestConvergenceIndicator:
    def test_agreement_gives_zero(self):
        assert convergence_indicator(np.eye(2), [np.eye(2), np.eye(2)]) == 0.0

    def test_mean_squared_frobenius(self):
        assert convergence_indicator(np.zeros((2, 2)), [np.eye(2), 2 * np.eye(2)]) == pytest.approx(5.0)

    def test_no_neighbours_carries_over(self):
        assert convergence_indicator(np.eye(2), [], previous=0.25) == 0.25
        assert convergence_indicator(np.eye(2), []) == 1e3


class TestBoundCoefficients:
    def test_no_neighbours(self):
        c, b = bound_coefficients(np.zeros((4, 2)), np.zeros((2, 2)), [], [], 4, np.eye(2))
        assert np.isnan(c) and np.isnan(b)

    def test_identical_factors_give_zero_scale(self, rng):
        B = rng.normal(size=(5, 3))
        Phi = rng.normal(size=(2, 3))
        c, b = bound_coefficients(B, Phi, [B], [Phi], 5, 0.01 * np.eye(2))
        assert c == pytest.approx(0.0)
        assert b == pytest.approx(0.02 * 2 * np.sum(Phi ** 2))


class TestConsensusFilter:
    def test_matches_per_agent_update(self, graph1, rng):
        graph = graph1.graph
        fg = functional(graph, drop=[(3, 4), (5, 1), (6, 2)], inactive=[2])
        raw = rng.normal(size=(7, 2, 2))
        feasible = np.array([True, True, False, True, False, True, True])
        flt = ConsensusFilter(EPSILON)
        updated = flt.update(raw, feasible, fg)

        start = np.where(feasible[:, None, None], raw, 0.0)
        for i in range(7):
            available = fg.available_neighbors(i)
            own_raw = [raw[i]] if feasible[i] and fg.active_nodes[i] else []
            expected = consensus_step(
                start[i],
                [start[j] for j in available],
                own_raw + [raw[j] for j in available if feasible[j]],
                EPSILON,
            )
            assert_allclose(updated[i], expected, atol=1e-12)

    def test_converges_to_a_common_raw_estimate(self, graph1):
        fg = functional(graph1.graph)
        theta = np.array([[1.1, 0.2], [-0.1, 0.9]])
        flt = ConsensusFilter(EPSILON)
        flt.update(np.zeros((7, 2, 2)), np.zeros(7, dtype=bool), fg)
        raw = np.broadcast_to(theta, (7, 2, 2))
        feasible = np.ones(7, dtype=bool)
        for _ in range(400):
            state = flt.update(raw, feasible, fg)
        assert_allclose(state, raw, atol=1e-8)

    def test_isolated_agent_keeps_its_state(self, graph1, rng):
        flt = ConsensusFilter(EPSILON)
        raw = rng.normal(size=(7, 2, 2))
        feasible = np.ones(7, dtype=bool)
        first = flt.update(raw, feasible, functional(graph1.graph)).copy()
        second = flt.update(rng.normal(size=(7, 2, 2)), np.zeros(7, dtype=bool),
                            functional(graph1.graph, inactive=[4]))
        assert_allclose(second[4], first[4])

    def test_reset(self, graph1, rng):
        flt = ConsensusFilter(EPSILON)
        flt.update(rng.normal(size=(7, 2, 2)), np.ones(7, dtype=bool), functional(graph1.graph))
        flt.reset()
        assert flt.state is None


class TestLocalGeometry:
    def test_exact_affine_observations(self, graph1):
        theta, Z = affine_image(graph1)
        _, B = incidence_blocks(graph1.graph)
        geometry = LocalGeometry(graph1.graph, graph1.nominal)
        snap = geometry.update(functional(graph1.graph), Z @ B)
        assert snap.feasible.all()
        assert_allclose(snap.theta, np.broadcast_to(theta, (7, 2, 2)), atol=1e-10)
        assert_allclose(snap.psi, 0.0, atol=1e-18)
        columns = np.arange(graph1.graph.n_edges)
        assert_allclose(snap.reconstruct(columns), Z @ B, atol=1e-10)

    def test_too_few_edges_is_infeasible_and_indicator_carries(self, graph1):
        _, Z = affine_image(graph1)
        _, B = incidence_blocks(graph1.graph)
        geometry = LocalGeometry(graph1.graph, graph1.nominal, psi_max=7.0)
        fg = functional(graph1.graph, drop=[(4, 0), (4, 2)])
        snap = geometry.update(fg, Z @ B)
        assert not snap.feasible[4]
        assert snap.psi[4] == 7.0
        assert snap.counted[4] == 0
        c, b = snap.bound_coefficients(np.eye(2))
        assert np.isnan(c[4]) and np.isnan(b[4])

    def test_factor_cache(self, graph1):
        geometry = LocalGeometry(graph1.graph, graph1.nominal)
        pattern = np.ones(3, dtype=bool)
        assert geometry.factor(0, pattern) is geometry.factor(0, pattern.copy())

    def test_variance_factor_matches_ral_covariance(self, graph1):
        from estimation.ral import ral_covariance

        _, Z = affine_image(graph1)
        _, B = incidence_blocks(graph1.graph)
        geometry = LocalGeometry(graph1.graph, graph1.nominal)
        fg = functional(graph1.graph, drop=[(3, 4)])
        snap = geometry.update(fg, Z @ B)
        m = graph1.graph.edge_index[(3, 4)]
        sl = graph1.graph.out_slices[3]
        Phi = geometry.factor(3, fg.edge_mask[sl])
        p = graph1.nominal[:, 3] - graph1.nominal[:, 4]
        R = 0.01 * np.eye(2)
        assert_allclose(snap.variance_factor(np.array([m]))[0] * R, ral_covariance(Phi, p, R), atol=1e-14)

    def test_constrained_variance_factor_matches_covariance(self, graph1):
        from estimation.ral import constrained_covariance

        graph = graph1.graph
        _, Z = affine_image(graph1)
        _, B = incidence_blocks(graph)
        geometry = LocalGeometry(graph, graph1.nominal, 'rotation')
        fg = functional(graph, drop=[(3, 4), (5, 1)])
        snap = geometry.update(fg, Z @ B)
        columns = np.array([graph.edge_index[(3, 4)], graph.edge_index[(5, 1)]])
        R = 0.01 * np.eye(2)
        factors = snap.variance_factor(columns)
        for k, m in zip(factors, columns):
            i = graph.sources[m]
            sl = graph.out_slices[i]
            H = geometry.nominal_relative[:, sl][:, fg.edge_mask[sl]]
            assert_allclose(k * R, constrained_covariance(geometry.nominal_relative[:, m], H, R), rtol=1e-12)

    def test_bound_coefficients_match_per_agent_formula(self, graph1):
        graph = graph1.graph
        _, Z = affine_image(graph1)
        _, B = incidence_blocks(graph)
        fg = functional(graph, drop=[(3, 4), (0, 5)])
        geometry = LocalGeometry(graph, graph1.nominal)
        snap = geometry.update(fg, Z @ B)
        R = 0.01 * np.eye(2)
        c, b = snap.bound_coefficients(R)
        blocks = functional_incidence(fg, graph)
        factors = [geometry.factor(i, fg.edge_mask[graph.out_slices[i]]) for i in range(7)]
        for i in np.flatnonzero(snap.feasible):
            neighbours = [j for j in fg.available_neighbors(i) if snap.feasible[j]]
            expected = bound_coefficients(blocks[i], factors[i], [blocks[j] for j in neighbours],
                                          [factors[j] for j in neighbours], 7, R)
            assert c[i] == pytest.approx(expected[0], rel=1e-9, abs=1e-12)
            assert b[i] == pytest.approx(expected[1], rel=1e-9)

    def test_indicator_bound_without_noise(self, graph1, rng):
        graph = graph1.graph
        _, target = affine_image(graph1)
        _, B = incidence_blocks(graph)
        geometry = LocalGeometry(graph, graph1.nominal)
        for trial in range(20):
            Z = target + 0.3 * rng.standard_normal(target.shape)
            fg = functional(graph, drop=[(3, 4)] if trial % 2 else [])
            snap = geometry.update(fg, Z @ B)
            delta = np.sum((Z - target) ** 2) / 7
            c, _ = snap.bound_coefficients(np.zeros((2, 2)))
            counted = snap.counted > 0
            assert np.all(snap.psi[counted] <= c[counted] * delta + 1e-12)

    def test_constrained_mode(self, graph1):
        transform = AffineTransform(1.5 * rotation_2d(0.4), [0.0, 0.0])
        Z = target_configuration(graph1.nominal, transform)
        _, B = incidence_blocks(graph1.graph)
        geometry = LocalGeometry(graph1.graph, graph1.nominal, constraint='similarity')
        snap = geometry.update(functional(graph1.graph, drop=[(4, 0), (4, 2)]), Z @ B)
        assert snap.feasible[4]
        assert_allclose(snap.theta[4], transform.theta, atol=1e-10)
        c, b = snap.bound_coefficients(np.eye(2))
        assert np.all(np.isnan(c)) and np.all(np.isnan(b))
