"""
Experiment execution: run scenarios, write per-scenario metrics and summaries, and a
top-level summary of the whole experiment.

Output layout:
    {out}/summary.json                      one entry per scenario
    {out}/summary.xlsx                      optional, same content as a workbook
    {out}/{scenario}/metrics.csv            run, step, time, delta, psi_i, c_i, b_i
    {out}/{scenario}/summary.json           aggregate metrics and per-step statistics
    {out}/{scenario}/scenario.resolved.json the fully expanded scenario
"""
import json
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from config import (
    METRICS_FILE,
    OUTPUT_DIR,
    RESOLVED_SCENARIO_FILE,
    SUCCESS_MESSAGES,
    SUMMARY_FILE,
    TIMESTAMP_FORMAT,
    get_run_output_dir,
)
from graph.loss_models import BernoulliLoss
from sim.metrics import metric_columns
from sim.monte_carlo import MonteCarloResult, run_monte_carlo
from sim.scenario import ScenarioConfig
from cli.scenario_loader import save_scenario
from util.logger_module import log_empty_line, log_separator, logger

SUMMARY_WORKBOOK = 'summary.xlsx'


def default_output_dir() -> Path:
    return OUTPUT_DIR / datetime.now().strftime(TIMESTAMP_FORMAT)


def _json_list(values: np.ndarray) -> list:
    """Array to nested lists with NaN written as null"""
    array = np.asarray(values, dtype=float)
    return np.where(np.isfinite(array), array, None).tolist()


def metrics_frame(result: MonteCarloResult) -> pd.DataFrame:
    """Long-format metric table of every run, in run-index order"""
    columns = metric_columns(result.aggregate.followers)
    rows = [row for run in sorted(result.runs, key=lambda r: r.run_index) for row in run.rows()]
    return pd.DataFrame(rows, columns=columns)


def scenario_summary(result: MonteCarloResult) -> dict:
    aggregate = result.aggregate
    cfg = result.scenario
    return {
        'scenario': cfg.name,
        'estimator': cfg.estimator.name,
        'loss_model': cfg.loss.describe(),
        'lambda': cfg.loss.lam if isinstance(cfg.loss, BernoulliLoss) else None,
        **aggregate.summary(),
        'followers': [i + 1 for i in aggregate.followers],
        'per_step': {
            'step': aggregate.logged_steps.tolist(),
            'time': _json_list(aggregate.times),
            'count': aggregate.count.tolist(),
            'delta_mean': _json_list(aggregate.delta_mean),
            'delta_std': _json_list(aggregate.delta_std),
            'psi_mean': _json_list(aggregate.psi_mean),
            'psi_std': _json_list(aggregate.psi_std),
            'c_mean': _json_list(aggregate.c_mean),
            'b_mean': _json_list(aggregate.b_mean),
            'corrected_psi_mean': _json_list(aggregate.corrected_psi_mean),
            'bound_gap_mean': _json_list(aggregate.bound_gap_mean),
            'bound_gap_se': _json_list(aggregate.bound_gap_se),
        },
        'runs': aggregate.run_summaries,
    }


def write_scenario_outputs(result: MonteCarloResult, out_dir) -> Path:
    """Write metrics.csv, summary.json and scenario.resolved.json of one scenario"""
    run_dir = get_run_output_dir(out_dir, result.scenario.name)
    run_dir.mkdir(parents=True, exist_ok=True)
    metrics_frame(result).to_csv(run_dir / METRICS_FILE, index=False, na_rep='nan')
    with open(run_dir / SUMMARY_FILE, 'w', encoding='utf-8') as f:
        json.dump(scenario_summary(result), f, indent=2)
    save_scenario(result.scenario, run_dir / RESOLVED_SCENARIO_FILE)
    logger.info(f"[SUCCESS] {result.scenario.name} -> {run_dir}")
    return run_dir


def write_summary_workbook(summaries: Sequence[dict], path) -> Path:
    """One row per scenario; per-step arrays are left to the JSON summaries"""
    columns = ['scenario', 'estimator', 'loss_model', 'runs', 'mean_error', 'mean_error_std',
               'steady_state_error', 'steady_state_error_std', 'diverged_runs', 'first_divergence_step']
    frame = pd.DataFrame([{key: s.get(key) for key in columns} for s in summaries], columns=columns)
    with pd.ExcelWriter(path, engine='openpyxl') as writer:
        frame.to_excel(writer, sheet_name='summary', index=False)
    return Path(path)


def lambda_table(summaries: Sequence[dict]) -> List[dict]:
    """Mean and steady-state error per (estimator, lambda) for Bernoulli scenarios"""
    rows = [
        {
            'estimator': s['estimator'],
            'lambda': s['lambda'],
            'mean_error': s['mean_error'],
            'steady_state_error': s['steady_state_error'],
            'diverged_runs': s['diverged_runs'],
        }
        for s in summaries if s.get('lambda') is not None
    ]
    return sorted(rows, key=lambda row: (row['estimator'], row['lambda']))


def run_experiment(scenarios: Sequence[ScenarioConfig], out_dir=None, workers: Optional[int] = None,
                   excel: bool = False) -> dict:
    """Run every scenario and write its outputs

    Args:
        scenarios: Validated scenarios, run in order
        out_dir: Output folder (default: Results/<timestamp>)
        workers: Upper bound on worker processes per batch
        excel: Also write summary.xlsx

    Returns:
        dict: Top-level summary (also written to {out_dir}/summary.json)
    """
    out_dir = Path(out_dir) if out_dir is not None else default_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)

    summaries: List[dict] = []
    for index, cfg in enumerate(scenarios, start=1):
        log_separator()
        logger.info(f"[{index}/{len(scenarios)}] {cfg.name}")
        logger.info(f"Estimator: {cfg.estimator.name}, loss model: {cfg.loss.describe()}")
        result = run_monte_carlo(cfg, workers)
        run_dir = write_scenario_outputs(result, out_dir)
        summary = scenario_summary(result)
        summary.pop('per_step')
        summary.pop('runs')
        summary['output_dir'] = str(run_dir)
        summaries.append(summary)
        log_empty_line()

    top = {
        'created': datetime.now().isoformat(timespec='seconds'),
        'output_dir': str(out_dir),
        'scenarios': summaries,
    }
    table = lambda_table(summaries)
    if table:
        top['lambda_table'] = table
    with open(out_dir / SUMMARY_FILE, 'w', encoding='utf-8') as f:
        json.dump(top, f, indent=2)
    if excel:
        write_summary_workbook(summaries, out_dir / SUMMARY_WORKBOOK)

    log_separator()
    logger.info(SUCCESS_MESSAGES['experiment_done'].format(count=len(summaries), path=out_dir))
    return top
