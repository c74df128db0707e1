"""Shared fixtures: shipped frameworks, their stress matrices and small scenarios"""
import numpy as np
import pytest

from control.laws import make_control_law
from formation.library import get_framework
from formation.stress import resolve_stress
from formation.trajectory import default_maneuver
from estimation.estimators import EstimatorSettings
from graph.loss_models import NoLoss
from sim.scenario import ControlSettings, NoiseSettings, ScenarioConfig, SimSettings


@pytest.fixture(scope='session')
def graph1():
    return get_framework('graph1')


@pytest.fixture(scope='session')
def graph2():
    return get_framework('graph2')


@pytest.fixture(scope='session')
def graph1_stress(graph1):
    return resolve_stress(graph1.graph, graph1.nominal)


@pytest.fixture(scope='session')
def graph2_stress(graph2):
    return resolve_stress(graph2.graph, graph2.nominal)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_scenario(framework, name='test', horizon=2.0, trajectory=None, estimator='none', loss=None,
                  sigma_v=0.1, runs=1, stress=None, **sim):
    """Small scenario on a shipped framework; every section may be overridden"""
    settings = estimator if isinstance(estimator, EstimatorSettings) else EstimatorSettings(name=estimator)
    return ScenarioConfig(
        name=name,
        graph=framework.graph,
        nominal=np.array(framework.nominal),
        trajectory=trajectory if trajectory is not None else default_maneuver(horizon),
        control=ControlSettings(leaders=framework.leaders),
        estimator=settings,
        loss=loss if loss is not None else NoLoss(),
        noise=NoiseSettings(sigma_v=sigma_v),
        sim=SimSettings(horizon=horizon, monte_carlo_runs=runs, **sim),
        stress=None if stress is None else np.array(stress.matrix),
        library=framework.name,
    )


@pytest.fixture
def scenario_factory(graph1, graph1_stress):
    def factory(framework=None, stress=None, **kwargs):
        framework = framework or graph1
        if stress is None and framework is graph1:
            stress = graph1_stress
        return make_scenario(framework, stress=stress, **kwargs)
    return factory


@pytest.fixture
def static_law(graph1_stress, graph1):
    return make_control_law('static-leaders').bind(graph1_stress, graph1.leaders)
