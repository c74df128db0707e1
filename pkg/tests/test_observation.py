import numpy as np
import pytest
from numpy.testing import assert_allclose

from estimation.observation import (
    ObservationSource,
    measure_edges,
    noise_factor,
    noise_gram_check,
    observe,
)
from graph.nominal import incidence_blocks

R = np.array([[0.04, 0.01], [0.01, 0.02]])


def test_noiseless_observation_is_exact(rng):
    obs = observe([1.5, -2.0], np.zeros((2, 2)), rng, edge=(3, 4))
    assert_allclose(obs.value, [1.5, -2.0])
    assert obs.edge == (3, 4)
    assert obs.source is ObservationSource.MEASURED


def test_noise_factor_reproduces_covariance():
    S = noise_factor(R)
    assert_allclose(S @ S.T, R, atol=1e-15)
    assert_allclose(noise_factor(np.zeros((3, 3))), 0.0)


def test_observation_statistics(rng):
    truth = np.array([0.3, 0.7])
    draws = np.array([observe(truth, R, rng).value for _ in range(20000)])
    assert_allclose(draws.mean(axis=0), truth, atol=0.006)
    assert_allclose(np.cov(draws.T), R, atol=0.003)


def test_measure_edges_adds_scaled_draws(graph1, rng):
    _, B = incidence_blocks(graph1.graph)
    Z = rng.normal(size=(2, 7))
    normals = rng.standard_normal((2, graph1.graph.n_edges))
    assert_allclose(measure_edges(Z, B, np.zeros((2, 2)), normals), Z @ B)
    factor = noise_factor(R)
    assert_allclose(measure_edges(Z, B, factor, normals) - Z @ B, factor @ normals)


def test_noise_gram_is_trace_times_identity(rng):
    gram = noise_gram_check(np.diag([0.04, 0.01]), 3, 20000, rng)
    assert_allclose(gram, 0.05 * np.eye(3), atol=3e-3)


@pytest.mark.parametrize('value', [0.0, 1e-4])
def test_isotropic_noise_scale(value, rng):
    obs = observe(np.zeros(3), value * np.eye(3), rng)
    assert obs.value.shape == (3,)
    assert np.all(np.abs(obs.value) <= 10 * np.sqrt(value) + 1e-15)
