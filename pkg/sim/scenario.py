"""
Scenario configuration: everything one simulation batch needs, as frozen dataclasses.

Ids are 0-based here and 1-based in `to_dict()`, which produces the scenario-file form
that cli.scenario_loader reads back.
"""
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple, Union

import numpy as np

from config import (
    CONTROL_LAWS,
    DEFAULT_ALPHA,
    DEFAULT_DIVERGENCE_THRESHOLD,
    DEFAULT_DT,
    DEFAULT_ETA,
    DEFAULT_GAMMA,
    DEFAULT_HORIZON,
    DEFAULT_INITIAL_RADIUS,
    DEFAULT_LOG_STRIDE,
    DEFAULT_MONTE_CARLO_RUNS,
    DEFAULT_SEED,
    DEFAULT_SIGMA_V,
    DEPARTURE_MOTIONS,
)
from control.laws import ControlLaw, make_control_law
from estimation.estimators import EstimatorSettings
from formation.stress import StressMatrix, resolve_stress
from formation.trajectory import TrajectorySpec
from graph.loss_models import LossModel, NodeDeparture, NoLoss, ScheduledLoss
from graph.nominal import NominalGraph
from util.errors import ScenarioValidationError


@dataclass(frozen=True)
class ControlSettings:
    law: str = 'static-leaders'
    alpha: float = DEFAULT_ALPHA
    eta: float = DEFAULT_ETA
    gamma: Union[str, float, Tuple[float, ...]] = DEFAULT_GAMMA
    leaders: Tuple[int, ...] = ()

    def build(self) -> ControlLaw:
        return make_control_law(self.law, self.alpha, self.eta, self.gamma)

    def as_dict(self) -> dict:
        gamma = list(self.gamma) if isinstance(self.gamma, tuple) else self.gamma
        return {
            'law': self.law,
            'alpha': self.alpha,
            'eta': self.eta,
            'gamma': gamma,
            'leaders': [i + 1 for i in self.leaders],
        }


@dataclass(frozen=True, eq=False)
class NoiseSettings:
    sigma_v: float = DEFAULT_SIGMA_V
    R: Optional[np.ndarray] = None

    def covariance(self, dim: int) -> np.ndarray:
        """Measurement noise covariance shared by all edges"""
        if self.R is not None:
            return np.array(self.R, dtype=float)
        return self.sigma_v ** 2 * np.eye(dim)

    def as_dict(self) -> dict:
        data = {'sigma_v': self.sigma_v}
        if self.R is not None:
            data['R'] = np.asarray(self.R).tolist()
        return data


@dataclass(frozen=True, eq=False)
class SimSettings:
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    monte_carlo_runs: int = DEFAULT_MONTE_CARLO_RUNS
    seed: int = DEFAULT_SEED
    log_stride: int = DEFAULT_LOG_STRIDE
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD
    initial_radius: float = DEFAULT_INITIAL_RADIUS
    initial_positions: Optional[np.ndarray] = None
    departure_motion: str = 'frozen'
    exit_velocity: Optional[Tuple[float, ...]] = None

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def as_dict(self) -> dict:
        data = {
            'dt': self.dt,
            'horizon': self.horizon,
            'monte_carlo_runs': self.monte_carlo_runs,
            'seed': self.seed,
            'log_stride': self.log_stride,
            'divergence_threshold': self.divergence_threshold,
            'initial_radius': self.initial_radius,
            'departure_motion': self.departure_motion,
        }
        if self.initial_positions is not None:
            data['initial_positions'] = np.asarray(self.initial_positions).T.tolist()
        if self.exit_velocity is not None:
            data['exit_velocity'] = list(self.exit_velocity)
        return data


def loss_chain(model: LossModel) -> List[LossModel]:
    """The model and every base model it wraps, outermost first"""
    chain = [model]
    while getattr(chain[-1], 'base', None) is not None:
        chain.append(chain[-1].base)
    return chain


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """A fully specified scenario; call resolve() to fix the stress matrix"""

    name: str
    graph: NominalGraph
    nominal: np.ndarray
    trajectory: TrajectorySpec
    control: ControlSettings
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    loss: LossModel = field(default_factory=NoLoss)
    noise: NoiseSettings = field(default_factory=NoiseSettings)
    sim: SimSettings = field(default_factory=SimSettings)
    stress: Optional[np.ndarray] = None
    library: Optional[str] = None

    @property
    def dim(self) -> int:
        return self.nominal.shape[0]

    @property
    def leaders(self) -> Tuple[int, ...]:
        return self.control.leaders

    @property
    def followers(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.graph.n_nodes) if i not in self.control.leaders)

    @property
    def is_resolved(self) -> bool:
        return self.stress is not None

    def resolve(self) -> "ScenarioConfig":
        """Copy with the stress matrix computed (or validated when given explicitly)"""
        stress = resolve_stress(self.graph, self.nominal, self.stress)
        return replace(self, stress=np.array(stress.matrix))

    def stress_matrix(self) -> StressMatrix:
        return resolve_stress(self.graph, self.nominal, self.stress)

    def departures(self) -> List[NodeDeparture]:
        return [m for m in loss_chain(self.loss) if isinstance(m, NodeDeparture)]

    def problems(self) -> List[str]:
        """Every semantic problem of the scenario, each naming its field"""
        found = []
        n = self.graph.n_nodes
        dim = self.dim
        sim = self.sim

        if self.nominal.shape != (dim, n):
            found.append(f"nominal_configuration must have {n} points, got {self.nominal.shape[1]}")
        if sim.dt <= 0:
            found.append(f"sim.dt must be positive, got {sim.dt}")
        if sim.horizon <= 0:
            found.append(f"sim.horizon must be positive, got {sim.horizon}")
        elif sim.dt > 0 and abs(sim.horizon / sim.dt - sim.n_steps) > 1e-6:
            found.append(f"sim.horizon ({sim.horizon}) must be an integer multiple of sim.dt ({sim.dt})")
        if sim.monte_carlo_runs < 1:
            found.append(f"sim.monte_carlo_runs must be >= 1, got {sim.monte_carlo_runs}")
        if sim.log_stride < 1:
            found.append(f"sim.log_stride must be >= 1, got {sim.log_stride}")
        if sim.divergence_threshold <= 0:
            found.append(f"sim.divergence_threshold must be positive, got {sim.divergence_threshold}")
        if sim.initial_radius < 0:
            found.append(f"sim.initial_radius must be >= 0, got {sim.initial_radius}")
        if sim.seed < 0:
            found.append(f"sim.seed must be a non-negative integer, got {sim.seed}")
        if sim.initial_positions is not None and np.shape(sim.initial_positions) != (dim, n):
            found.append(f"sim.initial_positions must hold {n} points of dimension {dim}")
        if sim.departure_motion not in DEPARTURE_MOTIONS:
            found.append(
                f"sim.departure_motion must be one of {', '.join(DEPARTURE_MOTIONS)}, got '{sim.departure_motion}'"
            )
        if sim.exit_velocity is not None and len(sim.exit_velocity) != dim:
            found.append(f"sim.exit_velocity must have {dim} components")

        if abs(self.trajectory.horizon - sim.horizon) > 1e-9 * max(1.0, sim.horizon):
            found.append(
                f"trajectory lasts {self.trajectory.horizon} s but sim.horizon is {sim.horizon} s"
            )
        if self.trajectory.dim != dim:
            found.append(f"trajectory is {self.trajectory.dim}-D but the formation is {dim}-D")

        control = self.control
        if control.law not in CONTROL_LAWS:
            found.append(f"control.law must be one of {', '.join(CONTROL_LAWS)}, got '{control.law}'")
        if control.alpha <= 0:
            found.append(f"control.alpha must be positive, got {control.alpha}")
        if control.eta < 0:
            found.append(f"control.eta must be >= 0, got {control.eta}")
        if isinstance(control.gamma, str):
            if control.gamma != 'stress':
                found.append(f"control.gamma must be 'stress', a number or a list, got '{control.gamma}'")
        else:
            gamma = np.atleast_1d(np.asarray(control.gamma, dtype=float))
            if gamma.size not in (1, n) or np.any(gamma <= 0):
                found.append(f"control.gamma must be positive, one value or one per agent ({n})")
        if not control.leaders:
            found.append("control.leaders must name at least one agent")
        for leader in control.leaders:
            if not 0 <= leader < n:
                found.append(f"control.leaders: agent {leader + 1} is outside 1..{n}")
        if len(set(control.leaders)) != len(control.leaders):
            found.append("control.leaders contains duplicates")

        found.extend(self.estimator.problems(self.graph.max_degree))

        if self.noise.sigma_v < 0:
            found.append(f"noise.sigma_v must be >= 0, got {self.noise.sigma_v}")
        if self.noise.R is not None:
            R = np.asarray(self.noise.R, dtype=float)
            if R.shape != (dim, dim):
                found.append(f"noise.R must be {dim} x {dim}, got {R.shape}")
            elif not np.allclose(R, R.T) or np.linalg.eigvalsh(0.5 * (R + R.T)).min() < 0:
                found.append("noise.R must be symmetric positive semidefinite")

        for model in loss_chain(self.loss):
            if isinstance(model, ScheduledLoss):
                found.extend(model.check_coverage(sim.n_steps))
                for interval in model.intervals:
                    for node in interval.drop_nodes:
                        if node in control.leaders:
                            found.append(f"loss_model.schedule drops leader {node + 1}; leaders cannot depart")
            if isinstance(model, NodeDeparture):
                if not 0 <= model.node < n:
                    found.append(f"loss_model.node {model.node + 1} is outside 1..{n}")
                elif model.node in control.leaders:
                    found.append(f"loss_model.node {model.node + 1} is a leader; leaders cannot depart")
        return found

    def validate(self) -> "ScenarioConfig":
        found = self.problems()
        if found:
            raise ScenarioValidationError(self.name, found)
        return self

    def to_dict(self) -> dict:
        """Scenario-file form (1-based ids), loadable by cli.scenario_loader"""
        graph_section = {'library': self.library} if self.library else self.graph.as_dict()
        data = {
            'name': self.name,
            'graph': graph_section,
            'nominal_configuration': self.nominal.T.tolist(),
            'stress': 'compute' if self.stress is None else np.asarray(self.stress).tolist(),
            'trajectory': self.trajectory.as_dict(),
            'control': self.control.as_dict(),
            'estimator': self.estimator.as_dict(),
            'loss_model': self.loss.as_dict(),
            'noise': self.noise.as_dict(),
            'sim': self.sim.as_dict(),
        }
        return data
