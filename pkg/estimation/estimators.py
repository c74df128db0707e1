"""
Relative-position estimators feeding the follower control laws.

Each estimator turns one step's measured observations into an estimate of every
directed edge's relative position, together with a validity mask and per-branch
counts over follower edges:

    none     measured edges only
    ral      measured edges, missing ones reconstructed from the own transform estimate
    conral   measured edges, missing ones reconstructed from the consensus transform
    rkf      edge Kalman filters, propagated through missing observations
    ga-rkf   edge Kalman filters fed with geometric pseudo-observations when an edge is missing
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from config import (
    CONSTRAINT_MODES,
    DEFAULT_EPSILON,
    DEFAULT_KAPPA,
    DEFAULT_PSI_MAX,
    DEFAULT_SIGMA_W,
    ESTIMATORS,
    GEOMETRY_SOURCES,
)
from estimation.consensus import ConsensusFilter
from estimation.geometry import GeometrySnapshot
from estimation.kalman import FilterBank, KinematicModel
from graph.nominal import FunctionalGraph, NominalGraph
from util.errors import ConfigurationError

BRANCHES = ('measured', 'geometric', 'propagated', 'invalid')


@dataclass(frozen=True)
class EstimatorSettings:
    name: str = 'none'
    sigma_w: float = DEFAULT_SIGMA_W
    kappa: float = DEFAULT_KAPPA
    epsilon: float = DEFAULT_EPSILON
    constraint: str = 'affine'
    geometry_source: str = 'raw'
    psi_max: float = DEFAULT_PSI_MAX

    def problems(self, max_degree: Optional[int] = None):
        """Validation problems, each naming its field"""
        found = []
        if self.name not in ESTIMATORS:
            found.append(f"estimator.type must be one of {', '.join(ESTIMATORS)}, got '{self.name}'")
        if self.sigma_w < 0:
            found.append(f"estimator.sigma_w must be >= 0, got {self.sigma_w}")
        if self.kappa < 0:
            found.append(f"estimator.kappa must be >= 0, got {self.kappa}")
        if self.psi_max < 0:
            found.append(f"estimator.psi_max must be >= 0, got {self.psi_max}")
        if self.constraint not in CONSTRAINT_MODES:
            found.append(f"estimator.constraint must be one of {', '.join(CONSTRAINT_MODES)}, got '{self.constraint}'")
        if self.geometry_source not in GEOMETRY_SOURCES:
            found.append(
                f"estimator.geometry_source must be one of {', '.join(GEOMETRY_SOURCES)}, got '{self.geometry_source}'"
            )
        limit = None if max_degree is None else 1.0 / (2 * max_degree + 1)
        if self.epsilon <= 0 or (limit is not None and self.epsilon >= limit):
            bound = f"(0, {limit:.4f})" if limit is not None else "(0, 1/(2*max degree+1))"
            found.append(f"estimator.epsilon must lie in {bound}, got {self.epsilon}")
        return found

    def as_dict(self) -> dict:
        return {
            'type': self.name,
            'sigma_w': self.sigma_w,
            'kappa': self.kappa,
            'epsilon': self.epsilon,
            'constraint': self.constraint,
            'geometry_source': self.geometry_source,
            'psi_max': self.psi_max,
        }


@dataclass
class EstimateResult:
    """Relative-position estimates of one step

    Attributes:
        z_hat: D x M estimates in edge-column order (zero where invalid)
        valid: Edges whose estimate may be used by the control law
        branches: Follower-edge counts per branch (measured, geometric, propagated, invalid)
    """

    z_hat: np.ndarray
    valid: np.ndarray
    branches: Dict[str, int] = field(default_factory=dict)


class Estimator(ABC):
    """Base class; one instance per run, reset between runs"""

    name = ''

    def __init__(self, graph: NominalGraph, P: np.ndarray, leaders, R: np.ndarray, dt: float,
                 settings: EstimatorSettings):
        self.graph = graph
        self.P = np.asarray(P, dtype=float)
        self.dim = self.P.shape[0]
        self.R = np.asarray(R, dtype=float)
        self.dt = float(dt)
        self.settings = settings
        is_leader = np.zeros(graph.n_nodes, dtype=bool)
        is_leader[list(leaders)] = True
        # edges owned by followers; leaders track the target and need no estimates
        self.follower_edges = ~is_leader[graph.sources]

    def reset(self):
        """Clear per-run state"""

    @abstractmethod
    def estimate(self, fg: FunctionalGraph, Y: np.ndarray, geometry: GeometrySnapshot) -> EstimateResult:
        ...

    def _count(self, measured, geometric, propagated, valid) -> Dict[str, int]:
        own = self.follower_edges
        return {
            'measured': int(np.count_nonzero(measured & own)),
            'geometric': int(np.count_nonzero(geometric & own)),
            'propagated': int(np.count_nonzero(propagated & own)),
            'invalid': int(np.count_nonzero(~valid & own)),
        }

    def _missing_with_geometry(self, fg: FunctionalGraph, geometry: GeometrySnapshot) -> np.ndarray:
        """Unavailable edges of active agents holding a transform estimate"""
        src = self.graph.sources
        return ~fg.edge_mask & fg.active_nodes[src] & geometry.feasible[src]


class NoEstimator(Estimator):
    name = 'none'

    def estimate(self, fg, Y, geometry):
        measured = fg.edge_mask
        z_hat = np.where(measured, Y, 0.0)
        nothing = np.zeros_like(measured)
        return EstimateResult(z_hat, measured.copy(), self._count(measured, nothing, nothing, measured))


class RALEstimator(Estimator):
    name = 'ral'

    def estimate(self, fg, Y, geometry):
        measured = fg.edge_mask
        geometric = self._missing_with_geometry(fg, geometry)
        z_hat = np.where(measured, Y, 0.0)
        columns = np.flatnonzero(geometric)
        if columns.size:
            z_hat[:, columns] = geometry.reconstruct(columns)
        valid = measured | geometric
        nothing = np.zeros_like(measured)
        return EstimateResult(z_hat, valid, self._count(measured, geometric, nothing, valid))


def conral_step(consensus: ConsensusFilter, fg: FunctionalGraph, Y: np.ndarray,
                geometry: GeometrySnapshot) -> EstimateResult:
    """One step of RAL with consensus filtering for all agents

    The consensus states absorb this step's raw estimates, then every missing edge of an
    active agent is reconstructed from the agent's consensus transform. Measured edges
    pass through.
    """
    graph = fg.graph
    con = consensus.update(geometry.theta, geometry.feasible, fg)
    measured = fg.edge_mask
    geometric = ~measured & fg.active_nodes[graph.sources]
    z_hat = np.where(measured, Y, 0.0)
    columns = np.flatnonzero(geometric)
    if columns.size:
        z_hat[:, columns] = geometry.reconstruct(columns, con)
    return EstimateResult(z_hat, measured | geometric)


class ConRALEstimator(Estimator):
    name = 'conral'

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.consensus = ConsensusFilter(self.settings.epsilon)

    def reset(self):
        self.consensus.reset()

    def estimate(self, fg, Y, geometry):
        result = conral_step(self.consensus, fg, Y, geometry)
        measured = fg.edge_mask
        geometric = result.valid & ~measured
        result.branches = self._count(measured, geometric, np.zeros_like(measured), result.valid)
        return result


class RKFEstimator(Estimator):
    """Edge Kalman filters on every follower edge; missing observations only propagate

    A filter starts at its edge's first observation. Until then the edge has no estimate.
    """

    name = 'rkf'

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.model = KinematicModel(self.dim, self.dt, self.settings.sigma_w)
        self.columns = np.flatnonzero(self.follower_edges)
        self.bank = FilterBank(self.model, self.columns)
        self.started = np.zeros(self.columns.size, dtype=bool)

    def reset(self):
        self.bank = FilterBank(self.model, self.columns)
        self.started = np.zeros(self.columns.size, dtype=bool)

    def pseudo_observations(self, fg, geometry):
        """Geometric pseudo-observations for the filtered edges: (mask, values D x n, noise n x D x D)"""
        n = self.columns.size
        return np.zeros(n, dtype=bool), np.zeros((self.dim, n)), np.zeros((n, self.dim, self.dim))

    def estimate(self, fg, Y, geometry):
        cols = self.columns
        measured = fg.edge_mask[cols]
        geometric, geo_values, geo_noise = self.pseudo_observations(fg, geometry)
        geometric &= ~measured

        values = np.where(measured, Y[:, cols], geo_values)
        noise = np.where(measured[:, None, None], self.R, geo_noise)
        observed = measured | geometric

        running = self.started.copy()
        self.bank.step(observed & running, values, noise)
        fresh = observed & ~running
        if fresh.any():
            self.bank.initialize(values, fresh)
            self.started |= fresh

        z_hat = np.where(fg.edge_mask, Y, 0.0)
        z_hat[:, cols] = np.where(self.started, self.bank.positions, 0.0)
        valid = fg.edge_mask.copy()
        valid[cols] = self.started

        full = np.zeros(self.graph.n_edges, dtype=bool)
        m_measured, m_geometric, m_propagated = full.copy(), full.copy(), full.copy()
        m_measured[cols] = measured
        m_geometric[cols] = geometric
        m_propagated[cols] = running & ~observed
        return EstimateResult(z_hat, valid, self._count(m_measured, m_geometric, m_propagated, valid))


def ga_rkf_pseudo_observations(columns: np.ndarray, fg: FunctionalGraph, geometry: GeometrySnapshot,
                               R: np.ndarray, kappa: float, thetas: Optional[np.ndarray] = None):
    """Pseudo-observations (Theta_i p_ij, R_geo + kappa psi_i I) for missing edges of feasible agents

    Returns:
        tuple: (mask over columns, values D x n, covariances n x D x D)
    """
    graph = fg.graph
    dim = R.shape[0]
    sources = graph.sources[columns]
    usable = ~fg.edge_mask[columns] & fg.active_nodes[sources] & geometry.feasible[sources]
    values = np.zeros((dim, columns.size))
    noise = np.zeros((columns.size, dim, dim))
    picked = columns[usable]
    if picked.size:
        values[:, usable] = geometry.reconstruct(picked, thetas)
        scale = geometry.variance_factor(picked)
        penalty = kappa * geometry.psi[graph.sources[picked]]
        noise[usable] = scale[:, None, None] * R + penalty[:, None, None] * np.eye(dim)
    return usable, values, noise


class GARKFEstimator(RKFEstimator):
    """Edge Kalman filters whose missing observations are replaced by RAL reconstructions

    The pseudo-observation covariance grows with the agent's convergence indicator, so
    geometry is trusted only once neighbouring transform estimates agree.
    """

    name = 'ga-rkf'

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.consensus = ConsensusFilter(self.settings.epsilon)

    def reset(self):
        super().reset()
        self.consensus.reset()

    def pseudo_observations(self, fg, geometry):
        thetas = None
        if self.settings.geometry_source == 'consensus':
            thetas = self.consensus.update(geometry.theta, geometry.feasible, fg)
        return ga_rkf_pseudo_observations(self.columns, fg, geometry, self.R, self.settings.kappa, thetas)


def ga_rkf_step(estimator: GARKFEstimator, fg: FunctionalGraph, Y: np.ndarray,
                geometry: GeometrySnapshot) -> EstimateResult:
    """One GA-RKF step of every follower edge filter"""
    return estimator.estimate(fg, Y, geometry)


_ESTIMATORS = {
    cls.name: cls for cls in (NoEstimator, RALEstimator, ConRALEstimator, RKFEstimator, GARKFEstimator)
}


def make_estimator(settings: EstimatorSettings, graph: NominalGraph, P: np.ndarray, leaders,
                   R: np.ndarray, dt: float) -> Estimator:
    try:
        cls = _ESTIMATORS[settings.name]
    except KeyError:
        raise ConfigurationError(
            f"estimator.type must be one of {', '.join(ESTIMATORS)}, got '{settings.name}'"
        ) from None
    return cls(graph, P, leaders, R, dt, settings)
