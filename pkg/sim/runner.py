"""
Closed-loop simulation of one run.

Each step k = 0..n_steps: realize the functional graph, snap the leaders to the target,
measure every available edge, record the tracking error, update the local geometry,
estimate, compute follower inputs and integrate. Metrics are recorded at every step;
dynamics are integrated for k < n_steps only. All randomness comes from the run's
counter-based streams, so a run is a pure function of (scenario, root seed, run index).
"""
import numpy as np

from formation.trajectory import evaluate_trajectory
from formation.transforms import target_configuration
from control.laws import step_dynamics
from estimation.estimators import BRANCHES, make_estimator
from estimation.geometry import LocalGeometry
from estimation.observation import measure_edges, noise_factor
from graph.loss_models import STREAM_INITIAL, STREAM_NOISE, RunStreams, realize_functional
from graph.nominal import incidence_blocks
from sim.metrics import RunMetrics, tracking_error
from sim.scenario import ScenarioConfig
from util.logger_module import logger


def target_path(cfg: ScenarioConfig) -> np.ndarray:
    """Target configurations of every step, shape (n_steps + 1, D, N)"""
    sim = cfg.sim
    return np.stack([
        target_configuration(cfg.nominal, evaluate_trajectory(cfg.trajectory, k * sim.dt))
        for k in range(sim.n_steps + 1)
    ])


def initial_positions(cfg: ScenarioConfig, target0: np.ndarray, streams: RunStreams) -> np.ndarray:
    if cfg.sim.initial_positions is not None:
        return np.array(cfg.sim.initial_positions, dtype=float)
    radius = cfg.sim.initial_radius
    perturbation = streams.generator(STREAM_INITIAL).uniform(-radius, radius, size=target0.shape)
    return target0 + perturbation


def run_once(cfg: ScenarioConfig, run_index: int = 0, targets: np.ndarray = None) -> RunMetrics:
    """Simulate one run of a scenario

    Args:
        cfg: Validated scenario; resolved ones skip the stress search
        run_index: Index of the run inside its batch (selects the random streams)
        targets: Precomputed target_path(cfg), shared by the runs of a batch

    Returns:
        RunMetrics: Metric streams of the run
    """
    sim = cfg.sim
    graph = cfg.graph
    dim, n = cfg.nominal.shape
    dt = sim.dt
    n_steps = sim.n_steps
    leaders = np.array(cfg.leaders, dtype=int)
    followers = np.array(cfg.followers, dtype=int)

    stress = cfg.stress_matrix()
    law = cfg.control.build().bind(stress, cfg.leaders)
    R = cfg.noise.covariance(dim)
    factor = noise_factor(R)
    estimator = make_estimator(cfg.estimator, graph, cfg.nominal, cfg.leaders, R, dt)
    geometry = LocalGeometry(graph, cfg.nominal, cfg.estimator.constraint, cfg.estimator.psi_max)
    _, B = incidence_blocks(graph)
    streams = RunStreams(sim.seed, run_index)
    if targets is None:
        targets = target_path(cfg)

    exit_velocity = None
    if sim.departure_motion == 'exit':
        exit_velocity = np.array(sim.exit_velocity if sim.exit_velocity is not None else np.eye(dim)[0], dtype=float)

    Z = initial_positions(cfg, targets[0], streams)
    Z_prev = None
    delta = np.zeros(n_steps + 1)
    logged, psi_rows, c_rows, b_rows = [], [], [], []
    availability = np.zeros(graph.n_edges, dtype=int)
    branches = dict.fromkeys(BRANCHES, 0)
    diverged_at = None
    last = n_steps

    for k in range(n_steps + 1):
        fg = realize_functional(graph, cfg.loss, k, streams)
        availability += fg.edge_mask
        Z_target = targets[k]
        Z[:, leaders] = Z_target[:, leaders]

        Y = measure_edges(Z, B, factor, streams.normals(STREAM_NOISE, k, (dim, graph.n_edges)))

        delta[k] = tracking_error(Z, Z_target, fg.active_nodes)
        if not np.isfinite(delta[k]) or delta[k] > sim.divergence_threshold:
            diverged_at = k
            last = k
            logger.warning(
                f"{cfg.name} run {run_index}: tracking error {delta[k]:.3e} at step {k} "
                f"(t = {k * dt:.2f} s) exceeds {sim.divergence_threshold:.1e}, run stopped"
            )
            break

        snapshot = geometry.update(fg, Y)
        if k % sim.log_stride == 0 or k == n_steps:
            c, b = snapshot.bound_coefficients(R)
            present = fg.active_nodes[followers]
            logged.append(k)
            psi_rows.append(np.where(present, snapshot.psi[followers], np.nan))
            c_rows.append(np.where(present, c[followers], np.nan))
            b_rows.append(np.where(present, b[followers], np.nan))

        if k == n_steps:
            break

        result = estimator.estimate(fg, Y, snapshot)
        for key, value in result.branches.items():
            branches[key] += value

        velocities = np.zeros_like(Z) if Z_prev is None else (Z - Z_prev) / dt
        U = law.inputs(result.z_hat, result.valid, active=fg.active_nodes,
                       edge_available=fg.edge_mask, velocities=velocities)
        Z_prev = Z.copy()
        Z = step_dynamics(Z, U, dt)
        if exit_velocity is not None:
            departed = ~fg.active_nodes
            Z[:, departed] += dt * exit_velocity[:, None]

    width = followers.size
    metrics = RunMetrics(
        run_index=run_index,
        followers=tuple(int(i) for i in followers),
        dt=dt,
        n_steps=n_steps,
        delta=delta[:last + 1],
        logged_steps=np.array(logged, dtype=int),
        psi=np.array(psi_rows).reshape(-1, width),
        c=np.array(c_rows).reshape(-1, width),
        b=np.array(b_rows).reshape(-1, width),
        availability=availability,
        branches=branches,
        diverged=diverged_at is not None,
        diverged_at=diverged_at,
    )
    logger.debug(
        f"{cfg.name} run {run_index}: mean error {metrics.mean_error:.3e}, "
        f"steady state {metrics.steady_state_error:.3e}"
    )
    return metrics
