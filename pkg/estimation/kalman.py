"""
Relative Kalman filtering with intermittent observations.

Each directed edge carries a constant-acceleration state per dimension, ordered
I_D (x) [position, velocity, acceleration]. Missing observations only propagate the
prediction. The recursion is written once over stacked arrays; `rkf_step` runs it on a
batch of one edge and FilterBank on every follower edge of a run.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from config import DEFAULT_SIGMA_W, INITIAL_COVARIANCE_DIAGONAL
from estimation.observation import Observation
from util.errors import CovarianceError


@dataclass(frozen=True)
class KinematicModel:
    dim: int
    dt: float
    sigma_w: float = DEFAULT_SIGMA_W

    @property
    def state_dim(self) -> int:
        return 3 * self.dim

    @cached_property
    def F(self) -> np.ndarray:
        dt = self.dt
        block = np.array([[1.0, dt, 0.5 * dt ** 2], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
        return np.kron(np.eye(self.dim), block)

    @cached_property
    def G(self) -> np.ndarray:
        return np.kron(np.eye(self.dim), np.array([[1.0, 0.0, 0.0]]))

    @cached_property
    def Q(self) -> np.ndarray:
        # acceleration increments of variance sigma_w^2 projected on the state
        gain = np.array([0.5 * self.dt ** 2, self.dt, 1.0])
        return self.sigma_w ** 2 * np.kron(np.eye(self.dim), np.outer(gain, gain))

    @cached_property
    def initial_covariance(self) -> np.ndarray:
        return np.kron(np.eye(self.dim), np.diag(INITIAL_COVARIANCE_DIAGONAL))

    def initial_mean(self, position: np.ndarray) -> np.ndarray:
        """Pure-position state: given position, zero velocity and acceleration"""
        return self.G.T @ np.asarray(position, dtype=float)


@dataclass(frozen=True, eq=False)
class EdgeFilterState:
    edge: Tuple[int, int]
    mean: np.ndarray
    covariance: np.ndarray

    def position(self, model: KinematicModel) -> np.ndarray:
        return model.G @ self.mean


def check_covariance(covariance: np.ndarray, rtol: float = 1e-10):
    """Raise CovarianceError when a (stack of) covariance matrices is not PSD"""
    values = np.linalg.eigvalsh(0.5 * (covariance + np.swapaxes(covariance, -1, -2)))
    scale = max(float(np.abs(values).max()), 1.0) if values.size else 1.0
    lowest = float(values.min()) if values.size else 0.0
    if lowest < -rtol * scale:
        raise CovarianceError(lowest)


def predict(mean: np.ndarray, covariance: np.ndarray, model: KinematicModel):
    """Stacked prediction: means (n, 3D), covariances (n, 3D, 3D)"""
    mean = mean @ model.F.T
    covariance = model.F @ covariance @ model.F.T + model.Q
    return mean, covariance


def correct(mean: np.ndarray, covariance: np.ndarray, values: np.ndarray, noise: np.ndarray,
            model: KinematicModel):
    """Stacked correction with observations values (n, D) of covariance noise (n, D, D)"""
    G = model.G
    PGt = covariance @ G.T
    S = G @ PGt + noise
    try:
        chol = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise CovarianceError(float(np.linalg.eigvalsh(S).min())) from None
    # K = P G^T S^-1 through the Cholesky factor of S
    half = np.linalg.solve(chol, np.swapaxes(PGt, -1, -2))
    gain = np.swapaxes(np.linalg.solve(np.swapaxes(chol, -1, -2), half), -1, -2)
    innovation = values - mean @ G.T
    mean = mean + np.einsum('nij,nj->ni', gain, innovation)
    covariance = covariance - gain @ G @ covariance
    covariance = 0.5 * (covariance + np.swapaxes(covariance, -1, -2))
    return mean, covariance, gain


def rkf_step(state: EdgeFilterState, model: KinematicModel, obs: Optional[Observation]) -> EdgeFilterState:
    """One predict/correct cycle of a single edge filter

    Raises:
        CovarianceError: The incoming covariance is not PSD
    """
    check_covariance(state.covariance)
    mean, covariance = predict(state.mean[None], state.covariance[None], model)
    if obs is not None:
        mean, covariance, _ = correct(mean, covariance, obs.value[None], obs.covariance[None], model)
    return EdgeFilterState(state.edge, mean[0], covariance[0])


class FilterBank:
    """RKF recursion on a fixed set of edges, stored as stacked arrays"""

    def __init__(self, model: KinematicModel, columns: np.ndarray):
        self.model = model
        self.columns = np.asarray(columns, dtype=int)
        n = self.columns.size
        self.mean = np.zeros((n, model.state_dim))
        self.covariance = np.zeros((n, model.state_dim, model.state_dim))
        self.last_gain = np.zeros((n, model.state_dim, model.dim))

    def initialize(self, positions: np.ndarray, which: Optional[np.ndarray] = None):
        """Start filters at the given positions with the initial covariance

        Args:
            positions: D x n relative positions, one column per filtered edge
            which: Boolean mask of the edges to (re)start; all edges when omitted
        """
        which = np.ones(self.columns.size, dtype=bool) if which is None else np.asarray(which, dtype=bool)
        self.mean[which] = positions.T[which] @ self.model.G
        self.covariance[which] = self.model.initial_covariance

    def step(self, observed: np.ndarray, values: np.ndarray, noise: np.ndarray):
        """Predict every edge, then correct the observed ones

        Args:
            observed: Boolean mask over the filtered edges
            values: D x n observation values (ignored where not observed)
            noise: n x D x D observation covariances (ignored where not observed)
        """
        self.mean, self.covariance = predict(self.mean, self.covariance, self.model)
        self.last_gain = np.zeros_like(self.last_gain)
        if np.any(observed):
            mean, covariance, gain = correct(
                self.mean[observed], self.covariance[observed], values.T[observed], noise[observed], self.model
            )
            self.mean[observed] = mean
            self.covariance[observed] = covariance
            self.last_gain[observed] = gain

    @property
    def positions(self) -> np.ndarray:
        """D x n position estimates"""
        return (self.mean @ self.model.G.T).T

    def state(self, index: int, edge: Tuple[int, int]) -> EdgeFilterState:
        return EdgeFilterState(edge, self.mean[index].copy(), self.covariance[index].copy())
