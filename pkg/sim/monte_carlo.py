"""
Monte Carlo batches and Bernoulli-availability sweeps.

Runs are independent (each has its own counter-based streams) and may execute in worker
processes; results are always returned and aggregated in run-index order.
"""
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

from config import LAMBDA_GRID, THREADS_ENV_VAR
from graph.loss_models import BernoulliLoss
from sim.metrics import AggregateMetrics, RunMetrics, aggregate_runs
from sim.runner import run_once, target_path
from sim.scenario import ScenarioConfig
from util.logger_module import logger


@dataclass
class MonteCarloResult:
    scenario: ScenarioConfig
    runs: List[RunMetrics]
    aggregate: AggregateMetrics


def worker_count(runs: int, requested: Optional[int] = None) -> int:
    """Number of worker processes: requested, capped by AFFINE_SWARM_THREADS and the run count"""
    workers = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            logger.warning(f"Ignoring {THREADS_ENV_VAR}={cap!r}: not an integer")
    return max(1, min(workers, runs))


def _run_batch_member(args):
    cfg, run_index, targets = args
    return run_once(cfg, run_index, targets)


def run_monte_carlo(cfg: ScenarioConfig, workers: Optional[int] = None) -> MonteCarloResult:
    """Run cfg.sim.monte_carlo_runs independent runs and aggregate them

    Args:
        cfg: Validated scenario
        workers: Upper bound on worker processes (default: CPU count)

    Returns:
        MonteCarloResult: Per-run metrics and their aggregate
    """
    cfg = cfg.validate()
    if not cfg.is_resolved:
        cfg = cfg.resolve()
    n_runs = cfg.sim.monte_carlo_runs
    targets = target_path(cfg)
    jobs = [(cfg, run_index, targets) for run_index in range(n_runs)]
    pool_size = worker_count(n_runs, workers)

    logger.info(f"Scenario {cfg.name}: {n_runs} run(s), {cfg.sim.n_steps} steps each, {pool_size} worker(s)")
    if pool_size == 1:
        runs = [_run_batch_member(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=pool_size) as pool:
            runs = list(pool.map(_run_batch_member, jobs))

    aggregate = aggregate_runs(runs)
    summary = aggregate.summary()
    logger.info(
        f"Scenario {cfg.name}: mean error {summary['mean_error']}, "
        f"steady state {summary['steady_state_error']}, diverged runs {summary['diverged_runs']}"
    )
    return MonteCarloResult(cfg, runs, aggregate)


def sweep_scenarios(cfg: ScenarioConfig, lambdas: Sequence[float] = LAMBDA_GRID,
                    symmetric: bool = False) -> List[ScenarioConfig]:
    """One scenario per Bernoulli availability lam, named '<name>/lambda=<lam>'"""
    return [
        replace(cfg, loss=BernoulliLoss(lam, symmetric), name=f"{cfg.name}/lambda={lam:g}")
        for lam in lambdas
    ]


def run_sweep(cfg: ScenarioConfig, lambdas: Sequence[float] = LAMBDA_GRID, symmetric: bool = False,
              workers: Optional[int] = None) -> List[MonteCarloResult]:
    """Repeat the batch over a grid of Bernoulli availabilities"""
    resolved = cfg.validate().resolve()
    return [run_monte_carlo(variant, workers) for variant in sweep_scenarios(resolved, lambdas, symmetric)]
