from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from estimation.estimators import EstimatorSettings
from formation.trajectory import constant_velocity_target, static_target
from graph.loss_models import BernoulliLoss, NodeDeparture, ScheduledLoss, ScheduleInterval
from graph.nominal import NominalGraph
from sim.metrics import RunMetrics, metric_columns, steady_state_window, tracking_error
from sim.runner import run_once
from sim.scenario import ControlSettings
from util.errors import ConfigurationError, ScenarioValidationError


class TestTrackingError:
    def test_zero_at_target(self, graph1):
        assert tracking_error(np.array(graph1.nominal), np.array(graph1.nominal)) == 0.0

    def test_mean_over_agents(self):
        target = np.zeros((2, 5))
        Z = target.copy()
        Z[:, 2] = [3.0, 4.0]
        assert tracking_error(Z, target) == pytest.approx(5.0)

    def test_inactive_agents_are_excluded(self):
        target = np.zeros((2, 4))
        Z = target.copy()
        Z[:, 3] = [100.0, 0.0]
        active = np.array([True, True, True, False])
        assert tracking_error(Z, target, active) == 0.0
        Z[:, 0] = [0.0, 3.0]
        assert tracking_error(Z, target, active) == pytest.approx(3.0)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError, match='Dimension mismatch'):
            tracking_error(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_no_active_agent(self):
        with pytest.raises(ConfigurationError):
            tracking_error(np.zeros((2, 3)), np.zeros((2, 3)), np.zeros(3, dtype=bool))


def test_steady_state_window():
    assert steady_state_window(6000) == 601
    assert steady_state_window(10) == 2
    assert steady_state_window(0) == 1


def test_metric_columns_are_one_based():
    assert metric_columns((3, 4)) == ['run', 'step', 'time', 'delta', 'psi_4', 'c_4', 'b_4', 'psi_5', 'c_5', 'b_5']


class TestScenarioValidation:
    def test_factory_scenario_is_valid(self, scenario_factory):
        assert scenario_factory().problems() == []

    def test_every_problem_is_reported(self, scenario_factory):
        cfg = scenario_factory()
        broken = replace(
            cfg,
            sim=replace(cfg.sim, log_stride=0, monte_carlo_runs=0),
            control=ControlSettings(leaders=(0, 1, 9), alpha=-1.0),
            estimator=EstimatorSettings(epsilon=0.5),
        )
        with pytest.raises(ScenarioValidationError) as info:
            broken.validate()
        problems = info.value.problems
        assert len(problems) == 5
        assert any('sim.log_stride' in p for p in problems)
        assert any('agent 10 is outside' in p for p in problems)
        assert any('estimator.epsilon' in p for p in problems)

    def test_horizon_must_match_trajectory_and_step(self, scenario_factory):
        cfg = scenario_factory(horizon=2.0)
        problems = replace(cfg, sim=replace(cfg.sim, horizon=2.005)).problems()
        assert any('integer multiple' in p for p in problems)
        assert any('trajectory lasts' in p for p in problems)

    def test_leaders_cannot_depart(self, scenario_factory):
        problems = scenario_factory(loss=NodeDeparture(1, 10)).problems()
        assert problems == ['loss_model.node 2 is a leader; leaders cannot depart']

    def test_resolve_and_to_dict(self, scenario_factory, graph2):
        cfg = scenario_factory(framework=graph2)
        assert not cfg.is_resolved
        resolved = cfg.resolve()
        assert resolved.is_resolved
        assert np.linalg.norm(resolved.stress) == pytest.approx(10.0)
        data = resolved.to_dict()
        assert data['graph'] == {'library': 'graph2'}
        assert data['control']['leaders'] == [1, 2, 3]
        assert np.array(data['stress']).shape == (10, 10)


class TestRunner:
    def test_noiseless_static_formation_converges(self, scenario_factory):
        cfg = scenario_factory(horizon=30.0, trajectory=static_target(30.0), sigma_v=0.0)
        metrics = run_once(cfg)
        assert not metrics.diverged
        assert metrics.delta[0] > 1e-3
        assert metrics.delta[-1] < 1e-10
        assert metrics.delta.size == 3001

    def test_same_seed_same_run(self, scenario_factory):
        cfg = scenario_factory(horizon=1.0, estimator='rkf', loss=BernoulliLoss(0.5))
        a, b = run_once(cfg, 3), run_once(cfg, 3)
        assert np.array_equal(a.delta, b.delta)
        assert np.array_equal(a.psi, b.psi, equal_nan=True)
        assert a.branches == b.branches

    def test_run_index_changes_the_draws(self, scenario_factory):
        cfg = scenario_factory(horizon=1.0, loss=BernoulliLoss(0.5))
        assert not np.array_equal(run_once(cfg, 0).delta, run_once(cfg, 1).delta)

    def test_losses_do_not_depend_on_the_estimator(self, scenario_factory):
        runs = [
            run_once(scenario_factory(horizon=1.0, estimator=name, loss=BernoulliLoss(0.5)))
            for name in ('none', 'ral', 'conral', 'rkf', 'ga-rkf')
        ]
        for other in runs[1:]:
            assert np.array_equal(other.availability, runs[0].availability)
            assert other.delta[0] == runs[0].delta[0]

    def test_ga_rkf_equals_rkf_without_losses(self, scenario_factory):
        rkf = run_once(scenario_factory(horizon=2.0, estimator='rkf'))
        ga = run_once(scenario_factory(horizon=2.0, estimator='ga-rkf'))
        assert_allclose(ga.delta, rkf.delta, rtol=0, atol=0)

    def test_indicator_bound_holds_pointwise_without_noise(self, scenario_factory):
        cfg = scenario_factory(horizon=3.0, sigma_v=0.0, loss=BernoulliLoss(0.7), log_stride=1)
        metrics = run_once(cfg)
        delta = metrics.logged_delta[:, None]
        finite = np.isfinite(metrics.c)
        assert finite.any()
        assert np.all(metrics.psi[finite] <= (metrics.c * delta)[finite] + 1e-12)
        assert_allclose(metrics.b[finite], 0.0)

    def test_logging_stride(self, scenario_factory):
        metrics = run_once(scenario_factory(horizon=2.0))
        assert metrics.logged_steps.tolist() == list(range(0, 201, 10))
        assert metrics.psi.shape == (21, 4)
        rows = metrics.rows()
        assert len(rows) == 21
        assert len(rows[0]) == len(metric_columns(metrics.followers))
        assert rows[-1][:3] == [0, 200, 2.0]

    def test_divergence_stops_the_run(self, scenario_factory):
        cfg = scenario_factory(horizon=100.0, trajectory=static_target(100.0), sigma_v=0.0, dt=1.0)
        metrics = run_once(cfg)
        assert metrics.diverged
        assert metrics.delta.size == metrics.diverged_at + 1
        assert metrics.delta[-1] > 1e6
        assert np.isnan(metrics.steady_state_error)
        assert metrics.summary()['steady_state_error'] is None

    def test_departed_follower_is_masked(self, scenario_factory):
        cfg = scenario_factory(horizon=1.0, loss=NodeDeparture(5, depart_step=50), log_stride=10)
        metrics = run_once(cfg)
        column = metrics.followers.index(5)
        departed = metrics.logged_steps >= 50
        assert np.all(np.isnan(metrics.psi[departed, column]))
        assert np.all(np.isfinite(metrics.psi[~departed, column]))

    def test_explicit_initial_positions(self, scenario_factory, graph1):
        start = np.array(graph1.nominal) + 0.5
        cfg = scenario_factory(horizon=0.1, sigma_v=0.0, trajectory=static_target(0.1), initial_positions=start)
        metrics = run_once(cfg)
        # three followers and the hub start 0.5 off in both axes; leaders snap to the target
        assert metrics.delta[0] == pytest.approx(4 * 0.5 / 7)

    @pytest.mark.parametrize('estimator', ['none', 'conral', 'ga-rkf'])
    def test_relabeling_the_agents_leaves_the_error_unchanged(self, estimator, scenario_factory, graph1):
        start = np.array(graph1.nominal) + np.linspace(-0.4, 0.4, 14).reshape(2, 7)
        schedule = ScheduledLoss([
            ScheduleInterval(0, 100),
            ScheduleInterval(100, 200, drop_edges=((3, 4), (5, 1), (4, 0))),
        ])
        cfg = scenario_factory(horizon=2.0, sigma_v=0.0, estimator=estimator, loss=schedule,
                               initial_positions=start)
        order = np.array([4, 0, 6, 2, 5, 1, 3])
        original = run_once(cfg)
        renamed = run_once(relabeled(cfg, order))
        assert not original.diverged
        assert_allclose(renamed.delta, original.delta, rtol=1e-9, atol=1e-14)

    def test_integral_action_removes_the_ramp_offset(self, scenario_factory):
        ramp = constant_velocity_target(30.0, [1.0, -0.5])
        static = run_once(scenario_factory(horizon=30.0, trajectory=ramp, sigma_v=0.0))
        cfg = scenario_factory(horizon=30.0, trajectory=ramp, sigma_v=0.0)
        integral = run_once(replace(cfg, control=replace(cfg.control, law='constant-velocity')))
        # the static law settles at a constant offset behind the moving target
        assert static.delta[-1] > 0.5
        assert_allclose(static.delta[-1], static.delta[1500], rtol=1e-3)
        assert integral.delta[-1] < 1e-6


def relabeled(cfg, order):
    """The same scenario with agent i renamed order[i]"""
    graph = cfg.graph
    renamed = NominalGraph.from_undirected(graph.n_nodes, [(order[i], order[j]) for i, j in graph.undirected_edges])
    nominal = np.empty_like(cfg.nominal)
    nominal[:, order] = cfg.nominal
    start = np.empty_like(cfg.sim.initial_positions)
    start[:, order] = cfg.sim.initial_positions
    stress = np.empty_like(cfg.stress)
    stress[np.ix_(order, order)] = cfg.stress
    intervals = [
        replace(iv, drop_edges=tuple((int(order[i]), int(order[j])) for i, j in iv.drop_edges))
        for iv in cfg.loss.intervals
    ]
    return replace(
        cfg,
        graph=renamed,
        nominal=nominal,
        stress=stress,
        control=replace(cfg.control, leaders=tuple(sorted(int(order[i]) for i in cfg.leaders))),
        loss=ScheduledLoss(intervals),
        sim=replace(cfg.sim, initial_positions=start),
    )


def test_run_metrics_summary_is_json_ready():
    metrics = RunMetrics(
        run_index=2, followers=(3,), dt=0.1, n_steps=4, delta=np.array([1.0, 0.5, 0.25, 0.125, 0.0625]),
        logged_steps=np.array([0, 2, 4]), psi=np.zeros((3, 1)), c=np.ones((3, 1)), b=np.zeros((3, 1)),
        availability=np.zeros(2, dtype=int),
    )
    summary = metrics.summary()
    assert summary['run'] == 2
    assert summary['mean_error'] == pytest.approx(0.3875)
    assert summary['steady_state_error'] == pytest.approx(0.0625)
    assert summary['diverged'] is False


@pytest.mark.slow
def test_shipped_static_scenario_converges_over_the_full_horizon():
    from cli.scenario_loader import load_scenario
    from config import get_scenario_path

    metrics = run_once(load_scenario(get_scenario_path('graph1_static')).resolve())
    assert metrics.delta.size == 6001
    assert metrics.delta[-1] < 1e-10
