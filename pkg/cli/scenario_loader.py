"""
Scenario files: JSON parsing, schema validation with exhaustive diagnostics, defaults
and dotted-path overrides.

Every problem found is collected with the dotted path of its field; loading fails once,
listing all of them.
"""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from config import (
    DEFAULT_ALPHA,
    DEFAULT_CONTROL_LAW,
    DEFAULT_DIVERGENCE_THRESHOLD,
    DEFAULT_DT,
    DEFAULT_EPSILON,
    DEFAULT_ESTIMATOR,
    DEFAULT_ETA,
    DEFAULT_GAMMA,
    DEFAULT_HORIZON,
    DEFAULT_INITIAL_RADIUS,
    DEFAULT_KAPPA,
    DEFAULT_LOG_STRIDE,
    DEFAULT_MONTE_CARLO_RUNS,
    DEFAULT_PSI_MAX,
    DEFAULT_SEED,
    DEFAULT_SIGMA_V,
    DEFAULT_SIGMA_W,
    ERROR_MESSAGES,
)
from estimation.estimators import EstimatorSettings
from formation.library import available_frameworks, get_framework
from formation.trajectory import (
    TrajectorySegment,
    TrajectorySpec,
    constant_velocity_target,
    default_maneuver,
    static_target,
)
from formation.transforms import AffineTransform
from graph.loss_models import BernoulliLoss, LossModel, NodeDeparture, NoLoss, ScheduledLoss, ScheduleInterval
from graph.nominal import NominalGraph
from sim.scenario import ControlSettings, NoiseSettings, ScenarioConfig, SimSettings
from util.errors import AffineSwarmError, ConfigurationError, ScenarioValidationError

SECTIONS = {
    'name': None,
    'graph': {'library', 'n_nodes', 'edges'},
    'nominal_configuration': None,
    'stress': None,
    'trajectory': {'type', 'initial', 'segments', 'velocity'},
    'control': {'law', 'alpha', 'eta', 'gamma', 'leaders'},
    'estimator': {'type', 'sigma_w', 'kappa', 'epsilon', 'constraint', 'geometry_source', 'psi_max'},
    'loss_model': None,
    'noise': {'sigma_v', 'R'},
    'sim': {
        'dt', 'horizon', 'monte_carlo_runs', 'seed', 'log_stride', 'divergence_threshold',
        'initial_radius', 'initial_positions', 'departure_motion', 'exit_velocity',
    },
}

LOSS_KEYS = {
    'none': {'type'},
    'bernoulli': {'type', 'lambda', 'symmetric_losses'},
    'schedule': {'type', 'intervals', 'base'},
    'departure': {'type', 'node', 'depart', 'depart_step', 'return', 'return_step', 'base'},
}
INTERVAL_KEYS = {'start', 'end', 'start_step', 'end_step', 'edges', 'drop_edges', 'drop_nodes', 'label'}
SEGMENT_KEYS = {'duration', 'theta', 'translation', 'mode'}
TRAJECTORY_NAMES = ('default', 'static')


class _Problems:
    """Collects problems instead of failing on the first"""

    def __init__(self):
        self.items: List[str] = []

    def add(self, message: str):
        self.items.append(message)

    def unknown_keys(self, data: dict, allowed: Iterable[str], path: str):
        for key in sorted(set(data) - set(allowed)):
            self.add(f"{path}.{key}: unknown key" if path else f"{key}: unknown key")

    def number(self, data: dict, key: str, path: str, default, kind=float, low=None, high=None,
               low_open=False):
        if key not in data:
            return default
        value = data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or (kind is int and not float(value).is_integer()):
            self.add(f"{path}.{key}: expected {'an integer' if kind is int else 'a number'}, got {value!r}")
            return default
        value = kind(value)
        too_low = low is not None and (value <= low if low_open else value < low)
        too_high = high is not None and value > high
        if too_low or too_high:
            lower = '(' if low_open else '['
            self.add(
                f"{path}.{key}: {value} outside the legal range "
                f"{lower}{'-inf' if low is None else low}, {'inf' if high is None else high}]"
            )
            return default
        return value

    def matrix(self, value, path: str, shape: Optional[Tuple[int, ...]] = None) -> Optional[np.ndarray]:
        try:
            array = np.array(value, dtype=float)
        except (TypeError, ValueError):
            self.add(f"{path}: expected a numeric array")
            return None
        if shape is not None and array.shape != shape:
            self.add(f"{path}: expected shape {shape}, got {array.shape}")
            return None
        if not np.all(np.isfinite(array)):
            self.add(f"{path}: contains non-finite values")
            return None
        return array


def read_json(path) -> dict:
    """Parse a UTF-8 JSON scenario file

    Raises:
        ConfigurationError: Missing file or syntax error (with line and column)
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(ERROR_MESSAGES['file_not_found'].format(path=path))
    text = path.read_text(encoding='utf-8')
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            ERROR_MESSAGES['parse_error'].format(path=path, reason=e.msg, line=e.lineno, column=e.colno)
        ) from None
    if not isinstance(data, dict):
        raise ConfigurationError(
            ERROR_MESSAGES['parse_error'].format(path=path, reason='top level must be an object', line=1, column=1)
        )
    return data


def parse_override(text: str) -> Tuple[str, Any]:
    """'a.b.c=value' -> ('a.b.c', value); the value is JSON when it parses, else a string"""
    if '=' not in text:
        raise ConfigurationError(f"override '{text}' must have the form key.path=value")
    key, raw = text.split('=', 1)
    key = key.strip()
    if not key:
        raise ConfigurationError(f"override '{text}' has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(data: dict, overrides: Iterable[str]) -> dict:
    """Copy of data with dotted-path overrides applied (intermediate objects are created)"""
    result = json.loads(json.dumps(data))
    for text in overrides:
        key, value = parse_override(text)
        parts = key.split('.')
        node = result
        for part in parts[:-1]:
            child = node.get(part)
            if isinstance(child, str):
                child = {'type': child}
            elif not isinstance(child, dict):
                child = {}
            node[part] = child
            node = child
        node[parts[-1]] = value
    return result


def _section(data: dict, key: str, problems: _Problems) -> dict:
    value = data.get(key, {})
    if isinstance(value, str) and key in ('trajectory', 'loss_model', 'estimator'):
        return {'type': value}
    if not isinstance(value, dict):
        problems.add(f"{key}: expected an object")
        return {}
    allowed = SECTIONS.get(key)
    if allowed is not None:
        problems.unknown_keys(value, allowed, key)
    return value


def _parse_graph(data: dict, problems: _Problems):
    """Returns (graph, nominal, default leaders, library name)"""
    section = _section(data, 'graph', problems)
    if 'graph' not in data:
        problems.add("graph: required section is missing")
        return None, None, (), None

    library = section.get('library')
    nominal = None
    leaders: Tuple[int, ...] = ()
    graph = None
    if library is not None:
        if set(section) - {'library'}:
            problems.add("graph: give either 'library' or 'n_nodes'/'edges', not both")
        try:
            framework = get_framework(library)
        except ConfigurationError:
            problems.add(f"graph.library: unknown framework '{library}' (available: {', '.join(available_frameworks())})")
            return None, None, (), None
        graph, nominal, leaders = framework.graph, np.array(framework.nominal), framework.leaders
    else:
        n = problems.number(section, 'n_nodes', 'graph', None, kind=int, low=2)
        edges = section.get('edges')
        if n is None:
            problems.add("graph.n_nodes: required")
        if not isinstance(edges, list) or not all(isinstance(e, list) and len(e) == 2 for e in edges):
            problems.add("graph.edges: expected a list of [i, j] pairs")
        elif n is not None:
            try:
                graph = NominalGraph.from_undirected(n, [(int(i) - 1, int(j) - 1) for i, j in edges])
            except (ConfigurationError, TypeError, ValueError) as e:
                problems.add(f"graph.edges: {e}")

    if 'nominal_configuration' in data:
        points = problems.matrix(data['nominal_configuration'], 'nominal_configuration')
        if points is not None:
            if points.ndim != 2 or points.shape[1] not in (2, 3):
                problems.add("nominal_configuration: expected a list of 2-D or 3-D points")
            elif graph is not None and points.shape[0] != graph.n_nodes:
                problems.add(f"nominal_configuration: {points.shape[0]} points for {graph.n_nodes} agents")
            else:
                nominal = points.T
    elif nominal is None:
        problems.add("nominal_configuration: required when graph.library is not used")

    if graph is not None and nominal is not None and not leaders:
        leaders = tuple(range(nominal.shape[0] + 1))
    return graph, nominal, leaders, library


def _parse_trajectory(data: dict, horizon: float, dim: int, problems: _Problems) -> Optional[TrajectorySpec]:
    raw = data.get('trajectory', 'default')
    if isinstance(raw, str):
        raw = {'type': raw}
    if not isinstance(raw, dict):
        problems.add("trajectory: expected a name or an object")
        return None
    problems.unknown_keys(raw, SECTIONS['trajectory'], 'trajectory')
    kind = raw.get('type', 'segments' if 'segments' in raw else 'default')
    try:
        if kind == 'default':
            if dim != 2:
                problems.add("trajectory: the default maneuver is 2-D; give explicit segments")
                return None
            return default_maneuver(horizon)
        if kind == 'static':
            return static_target(horizon, dim)
        if kind == 'constant-velocity':
            velocity = problems.matrix(raw.get('velocity'), 'trajectory.velocity', (dim,))
            return None if velocity is None else constant_velocity_target(horizon, velocity)
        if kind == 'segments':
            initial = AffineTransform.from_dict(raw['initial']) if 'initial' in raw else AffineTransform.identity(dim)
            segments = []
            for index, segment in enumerate(raw.get('segments') or []):
                path = f"trajectory.segments[{index}]"
                if not isinstance(segment, dict):
                    problems.add(f"{path}: expected an object")
                    continue
                problems.unknown_keys(segment, SEGMENT_KEYS, path)
                end = AffineTransform(segment.get('theta', np.eye(dim).tolist()),
                                      segment.get('translation', [0.0] * dim))
                segments.append(TrajectorySegment(float(segment.get('duration', 0.0)), end,
                                                  segment.get('mode', 'linear')))
            return TrajectorySpec(tuple(segments), initial)
    except (AffineSwarmError, KeyError, TypeError, ValueError) as e:
        problems.add(f"trajectory: {e}")
        return None
    problems.add(f"trajectory.type: unknown trajectory '{kind}' (use default, static, constant-velocity or segments)")
    return None


def _edge_list(value, path: str, graph: Optional[NominalGraph], problems: _Problems):
    edges = []
    if not isinstance(value, list):
        problems.add(f"{path}: expected a list of [i, j] pairs")
        return edges
    for pair in value:
        if not (isinstance(pair, list) and len(pair) == 2):
            problems.add(f"{path}: expected [i, j], got {pair!r}")
            continue
        edge = (int(pair[0]) - 1, int(pair[1]) - 1)
        if graph is not None and edge not in graph.edge_index:
            problems.add(f"{path}: ({pair[0]}, {pair[1]}) is not an edge of the graph")
            continue
        edges.append(edge)
    return tuple(edges)


def _to_step(section: dict, seconds_key: str, step_key: str, path: str, dt: float, problems: _Problems,
             required: bool = True) -> Optional[int]:
    if section.get(step_key) is not None:
        return problems.number(section, step_key, path, None, kind=int, low=0)
    if section.get(seconds_key) is not None:
        seconds = problems.number(section, seconds_key, path, None, low=0)
        if seconds is None:
            return None
        steps = seconds / dt
        if abs(steps - round(steps)) > 1e-6:
            problems.add(f"{path}.{seconds_key}: {seconds} s is not a multiple of sim.dt ({dt})")
        return int(round(steps))
    if required:
        problems.add(f"{path}.{seconds_key}: required")
    return None


def _parse_loss(raw, path: str, graph: Optional[NominalGraph], dt: float, n_steps: int,
                problems: _Problems) -> LossModel:
    if raw is None:
        return NoLoss()
    if isinstance(raw, str):
        raw = {'type': raw}
    if not isinstance(raw, dict):
        problems.add(f"{path}: expected an object")
        return NoLoss()
    kind = raw.get('type', 'none')
    if kind not in LOSS_KEYS:
        problems.add(f"{path}.type: unknown loss model '{kind}' (use {', '.join(LOSS_KEYS)})")
        return NoLoss()
    problems.unknown_keys(raw, LOSS_KEYS[kind], path)

    if kind == 'none':
        return NoLoss()
    if kind == 'bernoulli':
        lam = problems.number(raw, 'lambda', path, None, low=0.0, high=1.0)
        if 'lambda' not in raw:
            problems.add(f"{path}.lambda: required")
        symmetric = raw.get('symmetric_losses', False)
        if not isinstance(symmetric, bool):
            problems.add(f"{path}.symmetric_losses: expected true or false")
            symmetric = False
        return BernoulliLoss(1.0 if lam is None else lam, symmetric)

    base = _parse_loss(raw.get('base'), f"{path}.base", graph, dt, n_steps, problems)
    if kind == 'schedule':
        intervals = []
        entries = raw.get('intervals')
        if not isinstance(entries, list) or not entries:
            problems.add(f"{path}.intervals: expected a non-empty list")
            entries = []
        for index, entry in enumerate(entries):
            where = f"{path}.intervals[{index}]"
            if not isinstance(entry, dict):
                problems.add(f"{where}: expected an object")
                continue
            problems.unknown_keys(entry, INTERVAL_KEYS, where)
            start = _to_step(entry, 'start', 'start_step', where, dt, problems)
            last = index == len(entries) - 1
            end = _to_step(entry, 'end', 'end_step', where, dt, problems, required=not last)
            if end is None and last:
                end = n_steps
            edges = _edge_list(entry['edges'], f"{where}.edges", graph, problems) if 'edges' in entry else None
            drop_edges = _edge_list(entry.get('drop_edges', []), f"{where}.drop_edges", graph, problems)
            drop_nodes = []
            for node in entry.get('drop_nodes', []):
                if graph is not None and not (isinstance(node, int) and 1 <= node <= graph.n_nodes):
                    problems.add(f"{where}.drop_nodes: agent {node!r} is outside 1..{graph.n_nodes}")
                    continue
                drop_nodes.append(int(node) - 1)
            if start is not None and end is not None:
                intervals.append(ScheduleInterval(start, end, edges, drop_edges, tuple(drop_nodes),
                                                  str(entry.get('label', ''))))
        return ScheduledLoss(intervals, base)

    node = problems.number(raw, 'node', path, None, kind=int, low=1)
    if node is None:
        problems.add(f"{path}.node: required")
        node = 1
    depart = _to_step(raw, 'depart', 'depart_step', path, dt, problems)
    back = _to_step(raw, 'return', 'return_step', path, dt, problems, required=False)
    try:
        return NodeDeparture(node - 1, 0 if depart is None else depart, back, base)
    except ConfigurationError as e:
        problems.add(f"{path}: {e}")
        return base


def _parse_stress(data: dict, n: int, problems: _Problems) -> Optional[np.ndarray]:
    raw = data.get('stress', 'compute')
    if raw == 'compute':
        return None
    return problems.matrix(raw, 'stress', (n, n))


def scenario_from_dict(data: dict, name: Optional[str] = None) -> ScenarioConfig:
    """Build and validate a scenario from its file form

    Raises:
        ScenarioValidationError: Every problem found, each naming its field
    """
    problems = _Problems()
    problems.unknown_keys(data, SECTIONS, '')
    name = name or str(data.get('name', 'scenario'))

    graph, nominal, default_leaders, library = _parse_graph(data, problems)
    dim = nominal.shape[0] if nominal is not None else 2
    n = graph.n_nodes if graph is not None else 0

    sim_raw = _section(data, 'sim', problems)
    dt = problems.number(sim_raw, 'dt', 'sim', DEFAULT_DT, low=0.0, low_open=True)
    trajectory_raw = data.get('trajectory')
    explicit_segments = isinstance(trajectory_raw, dict) and 'segments' in trajectory_raw and 'horizon' not in sim_raw
    horizon = problems.number(sim_raw, 'horizon', 'sim', DEFAULT_HORIZON, low=0.0, low_open=True)
    trajectory = _parse_trajectory(data, horizon, dim, problems)
    if explicit_segments and trajectory is not None:
        horizon = trajectory.horizon

    initial_positions = None
    if 'initial_positions' in sim_raw and n:
        points = problems.matrix(sim_raw['initial_positions'], 'sim.initial_positions', (n, dim))
        initial_positions = None if points is None else points.T
    exit_velocity = None
    if 'exit_velocity' in sim_raw:
        velocity = problems.matrix(sim_raw['exit_velocity'], 'sim.exit_velocity', (dim,))
        exit_velocity = None if velocity is None else tuple(velocity.tolist())
    sim = SimSettings(
        dt=dt,
        horizon=horizon,
        monte_carlo_runs=problems.number(sim_raw, 'monte_carlo_runs', 'sim', DEFAULT_MONTE_CARLO_RUNS, kind=int, low=1),
        seed=problems.number(sim_raw, 'seed', 'sim', DEFAULT_SEED, kind=int, low=0),
        log_stride=problems.number(sim_raw, 'log_stride', 'sim', DEFAULT_LOG_STRIDE, kind=int, low=1),
        divergence_threshold=problems.number(sim_raw, 'divergence_threshold', 'sim', DEFAULT_DIVERGENCE_THRESHOLD,
                                             low=0.0, low_open=True),
        initial_radius=problems.number(sim_raw, 'initial_radius', 'sim', DEFAULT_INITIAL_RADIUS, low=0.0),
        initial_positions=initial_positions,
        departure_motion=str(sim_raw.get('departure_motion', 'frozen')),
        exit_velocity=exit_velocity,
    )

    control_raw = _section(data, 'control', problems)
    leaders = default_leaders
    if 'leaders' in control_raw:
        raw_leaders = control_raw['leaders']
        if not isinstance(raw_leaders, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in raw_leaders):
            problems.add("control.leaders: expected a list of agent ids")
        else:
            leaders = tuple(i - 1 for i in raw_leaders)
    gamma = control_raw.get('gamma', DEFAULT_GAMMA)
    if isinstance(gamma, list):
        gamma = tuple(float(g) for g in gamma)
    control = ControlSettings(
        law=str(control_raw.get('law', DEFAULT_CONTROL_LAW)),
        alpha=problems.number(control_raw, 'alpha', 'control', DEFAULT_ALPHA),
        eta=problems.number(control_raw, 'eta', 'control', DEFAULT_ETA),
        gamma=gamma,
        leaders=leaders,
    )

    estimator_raw = _section(data, 'estimator', problems)
    estimator = EstimatorSettings(
        name=str(estimator_raw.get('type', DEFAULT_ESTIMATOR)),
        sigma_w=problems.number(estimator_raw, 'sigma_w', 'estimator', DEFAULT_SIGMA_W),
        kappa=problems.number(estimator_raw, 'kappa', 'estimator', DEFAULT_KAPPA),
        epsilon=problems.number(estimator_raw, 'epsilon', 'estimator', DEFAULT_EPSILON),
        constraint=str(estimator_raw.get('constraint', 'affine')),
        geometry_source=str(estimator_raw.get('geometry_source', 'raw')),
        psi_max=problems.number(estimator_raw, 'psi_max', 'estimator', DEFAULT_PSI_MAX),
    )

    loss = _parse_loss(data.get('loss_model'), 'loss_model', graph, dt, sim.n_steps, problems)

    noise_raw = _section(data, 'noise', problems)
    R = problems.matrix(noise_raw['R'], 'noise.R', (dim, dim)) if 'R' in noise_raw else None
    noise = NoiseSettings(problems.number(noise_raw, 'sigma_v', 'noise', DEFAULT_SIGMA_V, low=0.0), R)

    stress = _parse_stress(data, n, problems) if n else None

    if graph is None or nominal is None or trajectory is None:
        raise ScenarioValidationError(name, problems.items)

    cfg = ScenarioConfig(
        name=name,
        graph=graph,
        nominal=nominal,
        trajectory=trajectory,
        control=control,
        estimator=estimator,
        loss=loss,
        noise=noise,
        sim=sim,
        stress=stress,
        library=library,
    )
    all_problems = problems.items + [p for p in cfg.problems() if p not in problems.items]
    if all_problems:
        raise ScenarioValidationError(name, all_problems)
    return cfg


def load_scenario(path, overrides: Iterable[str] = ()) -> ScenarioConfig:
    """Load, override and validate a scenario file

    Args:
        path: JSON scenario file
        overrides: Dotted-path overrides such as 'loss_model.lambda=0.5'

    Returns:
        ScenarioConfig: Validated scenario with every default filled in
    """
    data = read_json(path)
    data = apply_overrides(data, overrides)
    return scenario_from_dict(data, name=data.get('name') or Path(path).stem)


def save_scenario(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cfg.to_dict(), indent=2), encoding='utf-8')
    return path


def dump_problems(error: ScenarioValidationError) -> Dict[str, Any]:
    return {'scenario': error.name, 'problems': error.problems}
