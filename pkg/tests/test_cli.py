import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from config import (
    DEFAULT_HORIZON,
    DEFAULT_SEED,
    LAMBDA_GRID,
    METRICS_FILE,
    RESOLVED_SCENARIO_FILE,
    SCENARIO_DIR,
    SUMMARY_FILE,
    SWEEP_ESTIMATORS,
    get_run_output_dir,
)
from graph.loss_models import BernoulliLoss, NoLoss, ScheduledLoss
from util.errors import ConfigurationError, ScenarioValidationError
from cli.__main__ import main, resolve_target
from cli.experiment import lambda_table, run_experiment
from cli.presets import PRESETS, load_preset, preset_dicts, switching_schedule
from cli.scenario_loader import (
    apply_overrides,
    load_scenario,
    parse_override,
    read_json,
    save_scenario,
    scenario_from_dict,
)
from sim.runner import run_once

MINIMAL = {'graph': {'library': 'graph1'}}


def printed_json(text):
    return json.loads(text[text.index('{\n'):])


class TestScenarioFromDict:
    def test_minimal_scenario_gets_defaults(self):
        cfg = scenario_from_dict(MINIMAL, 'minimal')
        assert cfg.name == 'minimal'
        assert cfg.sim.horizon == DEFAULT_HORIZON
        assert cfg.sim.seed == DEFAULT_SEED
        assert cfg.leaders == (0, 1, 2)
        assert cfg.estimator.name == 'none'
        assert cfg.trajectory.horizon == pytest.approx(DEFAULT_HORIZON)

    def test_lambda_out_of_range(self):
        data = dict(MINIMAL, loss_model={'type': 'bernoulli', 'lambda': 1.5})
        with pytest.raises(ScenarioValidationError) as info:
            scenario_from_dict(data, 'bad')
        assert len(info.value.problems) == 1
        assert info.value.problems[0].startswith('loss_model.lambda')

    def test_unknown_keys_are_reported_together(self):
        data = dict(MINIMAL, colour='red', sim={'dtt': 0.1}, control={'law': 'static-leaders', 'beta': 2})
        with pytest.raises(ScenarioValidationError) as info:
            scenario_from_dict(data, 'bad')
        problems = info.value.problems
        assert 'colour: unknown key' in problems
        assert 'sim.dtt: unknown key' in problems
        assert 'control.beta: unknown key' in problems
        assert 'Scenario bad has 3 problem(s)' in str(info.value)

    def test_missing_graph(self):
        with pytest.raises(ScenarioValidationError) as info:
            scenario_from_dict({'sim': {'dt': 0.01}}, 'empty')
        assert 'graph: required section is missing' in info.value.problems

    def test_unknown_framework(self):
        with pytest.raises(ScenarioValidationError, match="unknown framework 'graph9'"):
            scenario_from_dict({'graph': {'library': 'graph9'}}, 'bad')

    def test_explicit_graph_uses_one_based_ids(self):
        data = {
            'graph': {'n_nodes': 4, 'edges': [[1, 2], [1, 3], [2, 3], [1, 4], [2, 4], [3, 4]]},
            'nominal_configuration': [[0, 0], [1, 0], [0, 1], [0.3, 0.3]],
            'trajectory': 'static',
            'sim': {'horizon': 1.0},
        }
        cfg = scenario_from_dict(data, 'explicit')
        assert cfg.graph.n_nodes == 4
        assert (0, 1) in cfg.graph.edge_index
        assert cfg.leaders == (0, 1, 2)
        assert cfg.library is None

    def test_edge_outside_the_graph(self):
        data = dict(MINIMAL, loss_model={
            'type': 'schedule', 'intervals': [{'start': 0.0, 'drop_edges': [[1, 2]]}],
        })
        with pytest.raises(ScenarioValidationError, match=r'\(1, 2\) is not an edge'):
            scenario_from_dict(data, 'bad')

    def test_schedule_times_must_be_whole_steps(self):
        data = dict(MINIMAL, loss_model={
            'type': 'schedule', 'intervals': [{'start': 0.0, 'end': 1.005}, {'start': 1.005}],
        })
        with pytest.raises(ScenarioValidationError, match='not a multiple of sim.dt'):
            scenario_from_dict(data, 'bad')

    def test_departure_in_seconds(self):
        data = dict(MINIMAL, loss_model={'type': 'departure', 'node': 5, 'depart': 10.0, 'return': 20.0})
        cfg = scenario_from_dict(data, 'departure')
        assert cfg.loss.node == 4
        assert cfg.loss.depart_step == 1000
        assert cfg.loss.return_step == 2000


class TestOverrides:
    def test_parse_override_values(self):
        assert parse_override('loss_model.lambda=0.5') == ('loss_model.lambda', 0.5)
        assert parse_override('estimator.type=ga-rkf') == ('estimator.type', 'ga-rkf')
        assert parse_override('control.leaders=[1,2,3]') == ('control.leaders', [1, 2, 3])

    @pytest.mark.parametrize('text', ['no-equals-sign', '=5'])
    def test_malformed_override(self, text):
        with pytest.raises(ConfigurationError):
            parse_override(text)

    def test_apply_creates_sections_and_leaves_input_untouched(self):
        data = {'estimator': 'rkf'}
        result = apply_overrides(data, ['estimator.kappa=2', 'sim.seed=7'])
        assert result == {'estimator': {'type': 'rkf', 'kappa': 2}, 'sim': {'seed': 7}}
        assert data == {'estimator': 'rkf'}


class TestFiles:
    def test_parse_error_reports_position(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{\n  "name": \n}', encoding='utf-8')
        with pytest.raises(ConfigurationError, match='line 3, column 1'):
            read_json(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match='File not found'):
            read_json(tmp_path / 'absent.json')

    def test_top_level_must_be_an_object(self, tmp_path):
        path = tmp_path / 'list.json'
        path.write_text('[1, 2]', encoding='utf-8')
        with pytest.raises(ConfigurationError, match='top level must be an object'):
            read_json(path)

    def test_name_defaults_to_the_file_stem(self, tmp_path):
        path = tmp_path / 'my-run.json'
        path.write_text(json.dumps(MINIMAL), encoding='utf-8')
        assert load_scenario(path).name == 'my-run'
        assert load_scenario(path, ['sim.seed=11']).sim.seed == 11

    def test_resolved_scenario_loads_back(self, tmp_path):
        data = dict(MINIMAL, estimator={'type': 'ga-rkf'},
                    loss_model={'type': 'departure', 'node': 6, 'depart': 5.0})
        cfg = scenario_from_dict(data, 'saved').resolve()
        path = save_scenario(cfg, tmp_path / 'out' / 'saved.json')
        again = load_scenario(path)
        assert again.to_dict() == cfg.to_dict()
        assert np.allclose(again.stress, cfg.stress)

    @pytest.mark.parametrize('path', sorted(SCENARIO_DIR.glob('*.json')), ids=lambda p: p.stem)
    def test_shipped_scenarios_are_valid(self, path):
        cfg = load_scenario(path)
        assert cfg.problems() == []

    def test_shipped_scenario_by_name(self):
        [cfg] = resolve_target('graph1_static', [])
        assert cfg.name == 'graph1-static'


class TestPresets:
    def test_every_preset_loads(self):
        for name in PRESETS:
            assert load_preset(name)

    def test_lambda_sweep_covers_the_grid(self):
        scenarios = load_preset('lambda-sweep')
        assert len(scenarios) == len(SWEEP_ESTIMATORS) * len(LAMBDA_GRID) == 40
        assert all(isinstance(cfg.loss, BernoulliLoss) for cfg in scenarios)
        assert {cfg.estimator.name for cfg in scenarios} == set(SWEEP_ESTIMATORS)

    def test_overrides_apply_to_every_scenario(self):
        scenarios = load_preset('random-loss-convergence', ['graph.library=graph2', 'sim.monte_carlo_runs=3'])
        assert all(cfg.graph.n_nodes == 10 and cfg.sim.monte_carlo_runs == 3 for cfg in scenarios)

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError, match='Unknown preset "nope"'):
            preset_dicts('nope')

    def test_switching_departure_schedule(self):
        scenarios = load_preset('switching-departure')
        assert [cfg.estimator.name for cfg in scenarios] == ['none', 'conral', 'rkf', 'ga-rkf']
        assert scenarios[-1].estimator.geometry_source == 'consensus'
        loss = scenarios[0].loss
        assert isinstance(loss, ScheduledLoss)
        nominal, switched = loss.intervals
        assert (nominal.start_step, nominal.end_step) == (0, 1500)
        assert switched.end_step == scenarios[0].sim.n_steps
        assert len(scenarios[0].trajectory.segments) == 1
        assert switched.drop_nodes == (4,)
        assert set(switched.drop_edges) == {(3, 0), (3, 5), (6, 2)}

    def test_switching_schedule_time(self):
        schedule = switching_schedule(3.0)
        assert schedule['intervals'][0]['end'] == 3.0
        assert schedule['intervals'][1]['start'] == 3.0


@pytest.mark.slow
def test_switching_departure_separates_the_estimators():
    scenarios = {cfg.estimator.name: cfg for cfg in load_preset('switching-departure', ['sim.monte_carlo_runs=1'])}
    outcome = {name: run_once(cfg.validate().resolve()) for name, cfg in scenarios.items()}
    assert outcome['none'].diverged
    assert outcome['rkf'].diverged
    # both diverging laws hold the formation until the switch at 15 s
    assert outcome['none'].diverged_at > 1500
    assert outcome['rkf'].diverged_at > 1500
    for name in ('conral', 'ga-rkf'):
        switched = outcome[name]
        assert not switched.diverged
        lossless = run_once(replace(scenarios[name], loss=NoLoss()).validate().resolve())
        assert switched.steady_state_error < 10.0 * lossless.steady_state_error


class TestExperiment:
    OVERRIDES = ['sim.horizon=1', 'sim.log_stride=5']

    def test_outputs_are_written(self, tmp_path):
        scenarios = load_preset('noiseless-baseline', self.OVERRIDES)
        top = run_experiment(scenarios, tmp_path, workers=1)
        run_dir = get_run_output_dir(tmp_path, 'noiseless-baseline')
        for name in (METRICS_FILE, SUMMARY_FILE, RESOLVED_SCENARIO_FILE):
            assert (run_dir / name).is_file()
        assert (tmp_path / SUMMARY_FILE).is_file()
        assert 'lambda_table' not in top

        frame = pd.read_csv(run_dir / METRICS_FILE)
        assert list(frame.columns[:4]) == ['run', 'step', 'time', 'delta']
        assert 'psi_4' in frame.columns and 'b_7' in frame.columns
        assert frame['step'].tolist() == list(range(0, 101, 5))

        summary = json.loads((run_dir / SUMMARY_FILE).read_text(encoding='utf-8'))
        assert summary['scenario'] == 'noiseless-baseline'
        assert summary['followers'] == [4, 5, 6, 7]
        assert len(summary['per_step']['delta_mean']) == 21

    def test_metrics_are_reproducible(self, tmp_path):
        for folder in ('a', 'b'):
            run_experiment(load_preset('noiseless-baseline', self.OVERRIDES), tmp_path / folder, workers=1)
        first = (get_run_output_dir(tmp_path / 'a', 'noiseless-baseline') / METRICS_FILE).read_bytes()
        second = (get_run_output_dir(tmp_path / 'b', 'noiseless-baseline') / METRICS_FILE).read_bytes()
        assert first == second

    def test_excel_summary(self, tmp_path):
        run_experiment(load_preset('noiseless-baseline', self.OVERRIDES), tmp_path, workers=1, excel=True)
        frame = pd.read_excel(tmp_path / 'summary.xlsx', sheet_name='summary', engine='openpyxl')
        assert frame['scenario'].tolist() == ['noiseless-baseline']

    def test_lambda_table_is_sorted(self):
        summaries = [
            {'estimator': 'rkf', 'lambda': 0.5, 'mean_error': 1.0, 'steady_state_error': 0.5, 'diverged_runs': 0},
            {'estimator': 'rkf', 'lambda': 0.2, 'mean_error': 2.0, 'steady_state_error': 1.5, 'diverged_runs': 1},
            {'estimator': 'none', 'lambda': None, 'mean_error': 0.1, 'steady_state_error': 0.1, 'diverged_runs': 0},
        ]
        table = lambda_table(summaries)
        assert [(row['estimator'], row['lambda']) for row in table] == [('rkf', 0.2), ('rkf', 0.5)]


class TestCommands:
    def test_list_presets(self, capsys):
        assert main(['list-presets']) == 0
        response = printed_json(capsys.readouterr().out)
        assert response['success'] is True
        assert set(response['data']['presets']) == set(PRESETS)
        assert response['data']['frameworks']['graph1']['leaders'] == [1, 2, 3]

    def test_validate_shipped_scenario(self, capsys):
        assert main(['validate', str(SCENARIO_DIR / 'graph1_static.json')]) == 0
        response = printed_json(capsys.readouterr().out)
        [report] = response['data']
        assert report['agents'] == 7
        assert report['edges'] == 12
        assert report['stability']['ok'] is True

    def test_validate_reports_every_problem(self, tmp_path, capsys):
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps(dict(MINIMAL, colour=1, sim={'log_stride': 0})), encoding='utf-8')
        assert main(['validate', str(path)]) == 1
        response = printed_json(capsys.readouterr().out)
        assert response['success'] is False
        assert len(response['problems']) == 2

    def test_validate_unstable_step(self, capsys):
        assert main(['validate', 'noiseless-baseline', '--override', 'sim.dt=1.0']) == 1
        response = printed_json(capsys.readouterr().out)
        assert response['error'] == 'unstable'

    def test_run_writes_outputs(self, tmp_path):
        code = main(['run', 'noiseless-baseline', '--out', str(tmp_path), '--workers', '1',
                     '--override', 'sim.horizon=0.5'])
        assert code == 0
        assert (get_run_output_dir(tmp_path, 'noiseless-baseline') / METRICS_FILE).is_file()

    def test_run_invalid_override(self, tmp_path):
        assert main(['run', 'noiseless-baseline', '--out', str(tmp_path), '--override', 'loss_model.lambda=2']) == 2
