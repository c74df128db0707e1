"""
Follower control laws, single-integrator dynamics and the discrete stability check.

Every law is driven by the stress feedback

    s_i = sum_j w_ij * zhat_ij

over the edges whose estimate is valid, with w_ij = -[L]_ij the edge stress. With exact
estimates on all edges s_i is row i of Z L, which vanishes on any affine image of the
nominal configuration.

A law object carries per-run state (integral accumulator, last received neighbour
velocities). Bind it to a stress matrix and leader set before use; binding resets the
state.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from config import DEFAULT_ALPHA, DEFAULT_ETA, DEFAULT_GAMMA, CONTROL_LAWS
from formation.stress import StressMatrix
from util.errors import ConfigurationError, EstimatorContractError
from util.logger_module import logger


@dataclass(frozen=True)
class StabilityReport:
    ok: bool
    spectral_radius: float
    message: str

    def as_dict(self) -> dict:
        return {'ok': self.ok, 'spectral_radius': self.spectral_radius, 'message': self.message}


class ControlLaw(ABC):
    """Base class of the follower laws"""

    name = ''

    def __init__(self):
        self.stress: Optional[StressMatrix] = None
        self.leaders: tuple = ()
        self._weights = None
        self._is_follower = None

    def bind(self, stress: StressMatrix, leaders: Sequence[int]) -> "ControlLaw":
        self.stress = stress
        self.leaders = tuple(int(i) for i in leaders)
        self._weights = stress.edge_weights
        self._is_follower = np.ones(stress.n_nodes, dtype=bool)
        self._is_follower[list(self.leaders)] = False
        self.reset()
        return self

    def reset(self):
        """Clear per-run state"""

    def _require_bound(self):
        if self.stress is None:
            raise ConfigurationError(f"control law '{self.name}' used before binding to a stress matrix")

    # ------------------------------------------------------------------
    # shared arithmetic
    # ------------------------------------------------------------------
    def stress_feedback(self, z_hat: np.ndarray, valid: np.ndarray) -> np.ndarray:
        """s_i = sum over valid edges (i, j) of w_ij * zhat_ij, as a D x N array"""
        self._require_bound()
        graph = self.stress.graph
        contributions = np.where(valid, z_hat, 0.0) * np.where(valid, self._weights, 0.0)
        return np.stack([
            np.bincount(graph.sources, weights=row, minlength=graph.n_nodes) for row in contributions
        ])

    @abstractmethod
    def _law(self, s: np.ndarray, agents: np.ndarray, z_hat: np.ndarray, valid: np.ndarray,
             edge_velocities: Optional[np.ndarray]) -> np.ndarray:
        """Inputs (D x len(agents)) from the feedback of the given agents; updates their state"""

    def _compute(self, z_hat, valid, agents, edge_velocities=None) -> np.ndarray:
        s = self.stress_feedback(z_hat, valid)
        u = np.zeros_like(s)
        if agents.size:
            u[:, agents] = self._law(s, agents, z_hat, valid, edge_velocities)
        return u

    # ------------------------------------------------------------------
    # public entry points
    # ------------------------------------------------------------------
    def inputs(self, z_hat: np.ndarray, valid: np.ndarray, active: Optional[np.ndarray] = None,
               edge_available: Optional[np.ndarray] = None, velocities: Optional[np.ndarray] = None) -> np.ndarray:
        """Inputs of all active followers at one step

        Args:
            z_hat: Estimated relative positions, D x M in edge-column order
            valid: Edges whose estimate may be used (M,)
            active: Agents present at this step; defaults to all
            edge_available: Edges with communication at this step (velocity messages)
            velocities: Each agent's own finite-difference velocity, D x N

        Returns:
            np.ndarray: D x N inputs; zero columns for leaders and absent agents
        """
        self._require_bound()
        agents_mask = self._is_follower.copy()
        if active is not None:
            agents_mask &= active
        return self._compute(z_hat, np.asarray(valid, dtype=bool), np.flatnonzero(agents_mask))

    def follower_input(self, i: int, z_hat: Mapping[int, np.ndarray], L: StressMatrix,
                       neighbor_velocities: Optional[Mapping[int, np.ndarray]] = None) -> np.ndarray:
        """Input of follower i from estimates of every nominal neighbour

        Raises:
            EstimatorContractError: z_hat lacks a nominal neighbour
        """
        if self.stress is not L:
            self.bind(L, self.leaders)
        graph = L.graph
        dim = len(next(iter(z_hat.values()))) if z_hat else 0
        full = np.zeros((dim, graph.n_edges))
        valid = np.zeros(graph.n_edges, dtype=bool)
        edge_velocities = np.zeros((dim, graph.n_edges))
        for j in graph.neighbors(i):
            if j not in z_hat:
                raise EstimatorContractError(i, j)
            m = graph.edge_index[(i, j)]
            full[:, m] = z_hat[j]
            valid[m] = True
            if neighbor_velocities is not None and j in neighbor_velocities:
                edge_velocities[:, m] = neighbor_velocities[j]
        return self._compute(full, valid, np.array([i]), edge_velocities)[:, i]

    @abstractmethod
    def error_recursion(self, L_ff: np.ndarray, dt: float) -> np.ndarray:
        """Transition matrix of the follower tracking error under exact estimates"""

    @abstractmethod
    def as_dict(self) -> dict:
        ...


class StaticLeaders(ControlLaw):
    """u_i = -s_i"""

    name = 'static-leaders'

    def _law(self, s, agents, z_hat, valid, edge_velocities):
        return -s[:, agents]

    def error_recursion(self, L_ff, dt):
        return np.eye(L_ff.shape[0]) - dt * L_ff

    def as_dict(self):
        return {'law': self.name}


class ConstantVelocity(ControlLaw):
    """u_i = -alpha s_i - eta a_i with the accumulator a_i += s_i after use"""

    name = 'constant-velocity'

    def __init__(self, alpha: float = DEFAULT_ALPHA, eta: float = DEFAULT_ETA):
        super().__init__()
        if alpha <= 0 or eta < 0:
            raise ConfigurationError(f"constant-velocity gains need alpha > 0 and eta >= 0, got {alpha}, {eta}")
        self.alpha = float(alpha)
        self.eta = float(eta)
        self.accumulator = None

    def reset(self):
        self.accumulator = None

    def _law(self, s, agents, z_hat, valid, edge_velocities):
        if self.accumulator is None or self.accumulator.shape != s.shape:
            self.accumulator = np.zeros_like(s)
        u = -self.alpha * s[:, agents] - self.eta * self.accumulator[:, agents]
        self.accumulator[:, agents] += s[:, agents]
        return u

    def error_recursion(self, L_ff, dt):
        n = L_ff.shape[0]
        identity = np.eye(n)
        return np.block([
            [identity - dt * self.alpha * L_ff, -dt * self.eta * identity],
            [L_ff, identity],
        ])

    def as_dict(self):
        return {'law': self.name, 'alpha': self.alpha, 'eta': self.eta}


class VaryingVelocity(ControlLaw):
    """u_i = -(1/gamma_i) (s_i - sum_j w_ij v_j), v_j the last velocity received from j

    gamma may be 'stress' (gamma_i = [L]_ii), one positive number, or one value per agent.
    """

    name = 'varying-velocity'

    def __init__(self, gamma: Union[str, float, Sequence[float]] = DEFAULT_GAMMA):
        super().__init__()
        if isinstance(gamma, str) and gamma != 'stress':
            raise ConfigurationError(f"control.gamma must be 'stress', a number or a list, got '{gamma}'")
        self.gamma_spec = gamma
        self.gamma = None
        self.received = None

    def bind(self, stress, leaders):
        n = stress.n_nodes
        if isinstance(self.gamma_spec, str):
            gamma = np.diag(stress.matrix).copy()
        else:
            gamma = np.broadcast_to(np.asarray(self.gamma_spec, dtype=float), (n,)).copy()
        followers = np.setdiff1d(np.arange(n), np.asarray(leaders, dtype=int))
        if np.any(gamma[followers] <= 0):
            raise ConfigurationError("control.gamma must be positive for every follower")
        self.gamma = gamma
        return super().bind(stress, leaders)

    def reset(self):
        self.received = None

    def inputs(self, z_hat, valid, active=None, edge_available=None, velocities=None):
        self._require_bound()
        graph = self.stress.graph
        dim = z_hat.shape[0]
        if self.received is None:
            self.received = np.zeros((dim, graph.n_edges))
        if velocities is not None:
            heard = np.ones(graph.n_edges, dtype=bool) if edge_available is None else np.asarray(edge_available, bool)
            self.received[:, heard] = velocities[:, graph.targets[heard]]
        agents_mask = self._is_follower.copy()
        if active is not None:
            agents_mask &= active
        return self._compute(z_hat, np.asarray(valid, dtype=bool), np.flatnonzero(agents_mask), self.received)

    def _law(self, s, agents, z_hat, valid, edge_velocities):
        graph = self.stress.graph
        if edge_velocities is None:
            edge_velocities = np.zeros_like(z_hat)
        # velocity messages are weighted over the same edges as the feedback
        weighted = np.where(valid, edge_velocities, 0.0) * np.where(valid, self._weights, 0.0)
        feedforward = np.stack([
            np.bincount(graph.sources, weights=row, minlength=graph.n_nodes) for row in weighted
        ])
        return -(s[:, agents] - feedforward[:, agents]) / self.gamma[agents]

    def error_recursion(self, L_ff, dt):
        n = L_ff.shape[0]
        followers = np.setdiff1d(np.arange(self.stress.n_nodes), np.asarray(self.leaders, dtype=int))
        gamma_inv = np.diag(1.0 / self.gamma[followers])
        W = np.diag(np.diag(L_ff)) - L_ff
        identity = np.eye(n)
        return np.block([
            [identity - dt * gamma_inv @ L_ff + gamma_inv @ W, -gamma_inv @ W],
            [identity, np.zeros((n, n))],
        ])

    def as_dict(self):
        gamma = self.gamma_spec if isinstance(self.gamma_spec, (str, int, float)) else list(self.gamma_spec)
        return {'law': self.name, 'gamma': gamma}


def make_control_law(name: str, alpha: float = DEFAULT_ALPHA, eta: float = DEFAULT_ETA,
                     gamma=DEFAULT_GAMMA) -> ControlLaw:
    """Fresh, unbound control law"""
    if name == StaticLeaders.name:
        return StaticLeaders()
    if name == ConstantVelocity.name:
        return ConstantVelocity(alpha, eta)
    if name == VaryingVelocity.name:
        return VaryingVelocity(gamma)
    raise ConfigurationError(f"control.law must be one of {', '.join(CONTROL_LAWS)}, got '{name}'")


def follower_input(law: ControlLaw, i: int, z_hat: Mapping[int, np.ndarray], L: StressMatrix,
                   neighbor_velocities: Optional[Mapping[int, np.ndarray]] = None) -> np.ndarray:
    return law.follower_input(i, z_hat, L, neighbor_velocities)


def step_dynamics(z: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """z_{k+1} = z_k + dt u_k"""
    if dt <= 0:
        raise ConfigurationError(f"time step must be positive, got {dt}")
    return z + dt * u


def stability_check(L: StressMatrix, dt: float, law: ControlLaw, leaders: Sequence[int]) -> StabilityReport:
    """Spectral radius of the linear follower-error recursion of `law` at step dt

    For the static-leader law this is the forward-Euler condition 0 < dt * lambda(L_ff) < 2.
    """
    if law.stress is not L or tuple(law.leaders) != tuple(leaders):
        law.bind(L, leaders)
    L_ff = L.follower_block(leaders)
    if L_ff.size == 0:
        return StabilityReport(True, 0.0, "no followers")
    transition = law.error_recursion(L_ff, dt)
    radius = float(np.max(np.abs(np.linalg.eigvals(transition))))
    ok = radius < 1.0
    if ok:
        message = f"{law.name} stable at dt={dt}: spectral radius {radius:.6f}"
    else:
        lam_max = float(np.linalg.eigvalsh(L_ff)[-1])
        message = (
            f"{law.name} unstable at dt={dt}: spectral radius {radius:.6f} "
            f"(dt * lambda_max(L_ff) = {dt * lam_max:.4f})"
        )
        logger.warning(message)
    return StabilityReport(ok, radius, message)
