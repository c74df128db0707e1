import numpy as np
import pytest
from numpy.testing import assert_allclose

from config import THREADS_ENV_VAR
from cli.presets import load_preset
from formation.trajectory import static_target
from graph.loss_models import BernoulliLoss
from sim.metrics import RunMetrics, aggregate_runs
from sim.monte_carlo import run_monte_carlo, run_sweep, sweep_scenarios, worker_count


def metrics(run_index, delta, psi, c, b, diverged_at=None):
    steps = np.arange(len(delta))
    width = np.shape(psi)[1]
    return RunMetrics(
        run_index=run_index, followers=tuple(range(3, 3 + width)), dt=0.1, n_steps=len(delta) - 1,
        delta=np.array(delta, dtype=float), logged_steps=steps, psi=np.array(psi, dtype=float),
        c=np.array(c, dtype=float), b=np.array(b, dtype=float), availability=np.zeros(4, dtype=int),
        diverged=diverged_at is not None, diverged_at=diverged_at,
    )


class TestAggregate:
    def test_single_run(self):
        run = metrics(0, [1.0, 0.5], [[0.2], [0.1]], [[1.0], [1.0]], [[0.0], [0.0]])
        agg = aggregate_runs([run])
        assert_allclose(agg.delta_mean, [1.0, 0.5])
        assert np.all(np.isnan(agg.delta_std))
        assert agg.count.tolist() == [1, 1]
        assert agg.n_runs == 1

    def test_mean_and_sample_std(self):
        runs = [
            metrics(1, [2.0, 1.0], [[0.4], [0.2]], [[1.0], [1.0]], [[0.1], [0.1]]),
            metrics(0, [0.0, 1.0], [[0.0], [0.2]], [[1.0], [1.0]], [[0.1], [0.1]]),
        ]
        agg = aggregate_runs(runs)
        assert_allclose(agg.delta_mean, [1.0, 1.0])
        assert_allclose(agg.delta_std, [np.sqrt(2.0), 0.0])
        assert [r['run'] for r in agg.run_summaries] == [0, 1]
        assert_allclose(agg.times, [0.0, 0.1])

    def test_corrected_indicator_and_bound_gap(self):
        run = metrics(0, [1.0, 0.5], [[0.5], [0.3]], [[2.0], [np.nan]], [[0.1], [0.1]])
        agg = aggregate_runs([run])
        assert agg.corrected_psi_mean[0, 0] == pytest.approx((0.5 - 0.1) / 2.0)
        assert agg.bound_gap_mean[0, 0] == pytest.approx(0.5 - 2.0 * 1.0 - 0.1)
        assert np.isnan(agg.corrected_psi_mean[1, 0])
        assert np.isnan(agg.bound_gap_mean[1, 0])

    def test_diverged_runs_contribute_recorded_steps_only(self):
        runs = [
            metrics(0, [1.0, 2.0, 3.0], [[0.0]] * 3, [[1.0]] * 3, [[0.0]] * 3),
            metrics(1, [1.0, 1e7], [[0.0]] * 2, [[1.0]] * 2, [[0.0]] * 2, diverged_at=1),
        ]
        agg = aggregate_runs(runs)
        assert agg.count.tolist() == [2, 2, 1]
        assert agg.delta_mean[2] == pytest.approx(3.0)
        summary = agg.summary()
        assert summary['diverged'] is True
        assert summary['diverged_runs'] == 1
        assert summary['first_divergence_step'] == 1
        assert summary['steady_state_error'] == pytest.approx(3.0)
        assert summary['steady_state_error_std'] is None

    def test_branch_totals(self):
        a = metrics(0, [1.0], [[0.0]], [[1.0]], [[0.0]])
        b = metrics(1, [1.0], [[0.0]], [[1.0]], [[0.0]])
        a.branches = {'measured': 3, 'geometric': 1}
        b.branches = {'measured': 2, 'geometric': 0}
        assert aggregate_runs([a, b]).summary()['branches'] == {'measured': 5, 'geometric': 1}


class TestWorkerCount:
    def test_capped_by_runs(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        assert worker_count(2, 8) == 2
        assert worker_count(10, 3) == 3

    def test_environment_cap(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, '1')
        assert worker_count(10, 8) == 1

    def test_invalid_environment_value_is_ignored(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, 'many')
        assert worker_count(10, 4) == 4


class TestBatches:
    def test_noiseless_runs_are_identical(self, scenario_factory, graph1):
        start = np.array(graph1.nominal) + 0.3
        cfg = scenario_factory(horizon=1.0, trajectory=static_target(1.0), sigma_v=0.0, runs=3,
                               initial_positions=start)
        result = run_monte_carlo(cfg, workers=1)
        assert len(result.runs) == 3
        assert_allclose(result.aggregate.delta_std, 0.0, atol=1e-15)
        assert [run.run_index for run in result.runs] == [0, 1, 2]

    def test_parallel_matches_serial(self, scenario_factory):
        cfg = scenario_factory(horizon=0.5, runs=2, loss=BernoulliLoss(0.6), estimator='ga-rkf')
        serial = run_monte_carlo(cfg, workers=1)
        parallel = run_monte_carlo(cfg, workers=2)
        for a, b in zip(serial.runs, parallel.runs):
            assert np.array_equal(a.delta, b.delta)
        assert serial.aggregate.summary() == parallel.aggregate.summary()

    def test_unresolved_scenarios_are_resolved_once(self, scenario_factory, graph2):
        result = run_monte_carlo(scenario_factory(framework=graph2, horizon=0.2, runs=1), workers=1)
        assert result.scenario.is_resolved

    def test_sweep_names_and_lambdas(self, scenario_factory):
        variants = sweep_scenarios(scenario_factory(name='base'), (0.1, 0.5, 1.0), symmetric=True)
        assert [v.name for v in variants] == ['base/lambda=0.1', 'base/lambda=0.5', 'base/lambda=1']
        assert [v.loss.lam for v in variants] == [0.1, 0.5, 1.0]
        assert all(v.loss.symmetric for v in variants)

    def test_run_sweep(self, scenario_factory):
        results = run_sweep(scenario_factory(horizon=0.2, runs=1), (0.5, 1.0), workers=1)
        assert [r.scenario.name for r in results] == ['test/lambda=0.5', 'test/lambda=1']
        full = results[1].runs[0].availability
        assert np.all(full == 21)


SWEEP_POINTS = (0.1, 0.3, 0.5, 1.0)


@pytest.fixture(scope='module')
def sweep_errors():
    """Mean tracking error of every sweep estimator at SWEEP_POINTS, two runs each"""
    errors = {}
    for cfg in load_preset('lambda-sweep', ['sim.monte_carlo_runs=2']):
        if cfg.loss.lam in SWEEP_POINTS:
            errors.setdefault(cfg.estimator.name, []).append(run_monte_carlo(cfg).aggregate.summary()['mean_error'])
    return {name: np.array(values) for name, values in errors.items()}


@pytest.mark.slow
class TestAcceptance:
    def test_indicator_stays_below_its_bound_on_average(self):
        cfg = load_preset('ci-bound', ['sim.monte_carlo_runs=40', 'sim.horizon=10'])[0]
        agg = run_monte_carlo(cfg).aggregate
        gap, se = agg.bound_gap_mean, agg.bound_gap_se
        checked = np.isfinite(gap) & np.isfinite(se)
        assert checked.mean() > 0.9
        assert np.all(gap[checked] <= 3.0 * se[checked])

    def test_filters_are_flat_across_availability(self, sweep_errors):
        for name in ('rkf', 'ga-rkf'):
            errors = sweep_errors[name]
            assert errors[SWEEP_POINTS.index(0.3)] < 2.0 * errors[-1]

    def test_conral_improves_with_availability(self, sweep_errors):
        conral, none = sweep_errors['conral'], sweep_errors['none']
        assert np.all(np.diff(conral) < 0)
        # with almost every edge lost there is little geometry left to use
        assert conral[0] == pytest.approx(none[0], rel=0.25)
        assert conral[0] > 10.0 * sweep_errors['rkf'][0]

    def test_no_estimator_degrades_as_edges_are_lost(self, sweep_errors):
        assert np.all(np.diff(sweep_errors['none']) < 0)
