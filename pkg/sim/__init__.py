"""
Closed-loop simulation, Monte Carlo batches and metrics
"""
from .scenario import ControlSettings, NoiseSettings, ScenarioConfig, SimSettings, loss_chain
from .metrics import AggregateMetrics, RunMetrics, aggregate_runs, metric_columns, steady_state_window, tracking_error
from .runner import run_once, target_path
from .monte_carlo import MonteCarloResult, run_monte_carlo, run_sweep, sweep_scenarios, worker_count

__all__ = [
    # Scenario
    'ControlSettings',
    'NoiseSettings',
    'ScenarioConfig',
    'SimSettings',
    'loss_chain',

    # Metrics
    'AggregateMetrics',
    'RunMetrics',
    'aggregate_runs',
    'metric_columns',
    'steady_state_window',
    'tracking_error',

    # Runs
    'run_once',
    'target_path',
    'MonteCarloResult',
    'run_monte_carlo',
    'run_sweep',
    'sweep_scenarios',
    'worker_count',
]
