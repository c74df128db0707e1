"""
Tracking error, per-run metric streams and their aggregation across Monte Carlo runs.
"""
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import ERROR_MESSAGES, STEADY_STATE_FRACTION
from util.errors import ConfigurationError


def tracking_error(Z: np.ndarray, Z_target: np.ndarray, active_nodes: Optional[np.ndarray] = None) -> float:
    """Mean squared position error over the active agents

    Raises:
        ConfigurationError: No active agent
    """
    if Z.shape != Z_target.shape:
        raise ConfigurationError(
            ERROR_MESSAGES['dimension_mismatch'].format(detail=f"configurations {Z.shape} and {Z_target.shape}")
        )
    if active_nodes is None:
        active_nodes = np.ones(Z.shape[1], dtype=bool)
    count = int(np.count_nonzero(active_nodes))
    if count == 0:
        raise ConfigurationError(ERROR_MESSAGES['empty_active_set'])
    diff = (Z - Z_target)[:, active_nodes]
    return float(np.sum(diff * diff)) / count


def steady_state_window(n_steps: int) -> int:
    """Number of trailing steps averaged for the steady-state error"""
    return max(1, int(np.ceil(STEADY_STATE_FRACTION * (n_steps + 1))))


@dataclass
class RunMetrics:
    """Metric streams of one run

    `delta` holds the tracking error of every simulated step; the indicator columns
    (psi, c, b, one column per follower) are recorded at the logged steps only.
    """

    run_index: int
    followers: Tuple[int, ...]
    dt: float
    n_steps: int
    delta: np.ndarray
    logged_steps: np.ndarray
    psi: np.ndarray
    c: np.ndarray
    b: np.ndarray
    availability: np.ndarray
    branches: Dict[str, int] = field(default_factory=dict)
    diverged: bool = False
    diverged_at: Optional[int] = None

    @property
    def logged_delta(self) -> np.ndarray:
        return self.delta[self.logged_steps]

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.delta))

    @property
    def steady_state_error(self) -> float:
        """Mean error over the final 10% of the horizon; NaN when the run stopped early"""
        if self.diverged or self.delta.size < self.n_steps + 1:
            return float('nan')
        return float(np.mean(self.delta[-steady_state_window(self.n_steps):]))

    def summary(self) -> dict:
        return {
            'run': self.run_index,
            'mean_error': self.mean_error,
            'steady_state_error': _json_float(self.steady_state_error),
            'diverged': self.diverged,
            'diverged_at': self.diverged_at,
            'branches': dict(self.branches),
        }

    def rows(self) -> List[list]:
        """CSV rows: run, step, time, delta, then psi/c/b per follower"""
        out = []
        for position, step in enumerate(self.logged_steps):
            row = [self.run_index, int(step), round(float(step) * self.dt, 10), float(self.delta[step])]
            for column in range(len(self.followers)):
                row.extend([self.psi[position, column], self.c[position, column], self.b[position, column]])
            out.append(row)
        return out


def metric_columns(followers: Sequence[int]) -> List[str]:
    """CSV header; follower ids are 1-based"""
    columns = ['run', 'step', 'time', 'delta']
    for i in followers:
        columns.extend([f'psi_{i + 1}', f'c_{i + 1}', f'b_{i + 1}'])
    return columns


def _json_float(value: float):
    return None if value is None or not np.isfinite(value) else float(value)


def _nan_stats(stack: np.ndarray, axis: int = 0):
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', RuntimeWarning)
        mean = np.nanmean(stack, axis=axis)
        std = np.nanstd(stack, axis=axis, ddof=1)
    return mean, std


@dataclass
class AggregateMetrics:
    """Per-step mean and sample standard deviation across runs

    Diverged runs contribute only the steps they recorded; `count` holds the number of
    runs behind every logged step.
    """

    logged_steps: np.ndarray
    times: np.ndarray
    count: np.ndarray
    delta_mean: np.ndarray
    delta_std: np.ndarray
    psi_mean: np.ndarray
    psi_std: np.ndarray
    c_mean: np.ndarray
    b_mean: np.ndarray
    corrected_psi_mean: np.ndarray
    bound_gap_mean: np.ndarray
    bound_gap_se: np.ndarray
    run_summaries: List[dict]
    followers: Tuple[int, ...]

    @property
    def n_runs(self) -> int:
        return len(self.run_summaries)

    def summary(self) -> dict:
        means = np.array([r['mean_error'] for r in self.run_summaries], dtype=float)
        steady = np.array([np.nan if r['steady_state_error'] is None else r['steady_state_error']
                           for r in self.run_summaries], dtype=float)
        mean_of_means, std_of_means = _nan_stats(means)
        mean_steady, std_steady = _nan_stats(steady)
        branches: Dict[str, int] = {}
        for r in self.run_summaries:
            for key, value in r['branches'].items():
                branches[key] = branches.get(key, 0) + value
        diverged = [r for r in self.run_summaries if r['diverged']]
        return {
            'runs': self.n_runs,
            'mean_error': _json_float(mean_of_means),
            'mean_error_std': _json_float(std_of_means),
            'steady_state_error': _json_float(mean_steady),
            'steady_state_error_std': _json_float(std_steady),
            'diverged': bool(diverged),
            'diverged_runs': len(diverged),
            'first_divergence_step': min((r['diverged_at'] for r in diverged), default=None),
            'branches': branches,
        }


def _padded(runs: Sequence[RunMetrics], attribute: str, length: int) -> np.ndarray:
    width = len(runs[0].followers)
    stack = np.full((len(runs), length, width), np.nan)
    for r, run in enumerate(runs):
        values = getattr(run, attribute)
        stack[r, :values.shape[0]] = values
    return stack


def aggregate_runs(runs: Sequence[RunMetrics]) -> AggregateMetrics:
    """Aggregate runs in run-index order"""
    runs = sorted(runs, key=lambda run: run.run_index)
    longest = max(runs, key=lambda run: run.logged_steps.size)
    steps = longest.logged_steps
    length = steps.size

    delta = np.full((len(runs), length), np.nan)
    for r, run in enumerate(runs):
        delta[r, :run.logged_steps.size] = run.logged_delta
    psi = _padded(runs, 'psi', length)
    c = _padded(runs, 'c', length)
    b = _padded(runs, 'b', length)

    count = np.count_nonzero(np.isfinite(delta), axis=0)
    delta_mean, delta_std = _nan_stats(delta)
    psi_mean, psi_std = _nan_stats(psi)
    with np.errstate(invalid='ignore', divide='ignore'):
        corrected = (psi - b) / c
        gap = psi - c * delta[:, :, None] - b
    corrected_mean, _ = _nan_stats(corrected)
    gap_mean, gap_std = _nan_stats(gap)
    gap_count = np.count_nonzero(np.isfinite(gap), axis=0)
    with np.errstate(invalid='ignore', divide='ignore'):
        gap_se = gap_std / np.sqrt(gap_count)
    c_mean, _ = _nan_stats(c)
    b_mean, _ = _nan_stats(b)

    return AggregateMetrics(
        logged_steps=steps,
        times=steps * longest.dt,
        count=count,
        delta_mean=delta_mean,
        delta_std=delta_std,
        psi_mean=psi_mean,
        psi_std=psi_std,
        c_mean=c_mean,
        b_mean=b_mean,
        corrected_psi_mean=corrected_mean,
        bound_gap_mean=gap_mean,
        bound_gap_se=gap_se,
        run_summaries=[run.summary() for run in runs],
        followers=longest.followers,
    )
