"""
Consensus filtering of transform estimates and the local convergence indicator.

The per-agent functions state the update for one agent; ConsensusFilter applies the
same update to every agent at once over the available edges of a step. Exchanges follow
the communication graph: an unavailable edge carries no message in either sum.
"""
from typing import Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_PSI_MAX
from graph.nominal import FunctionalGraph


def consensus_step(own: np.ndarray, neighbor_consensus: Sequence[np.ndarray],
                   neighbor_raw: Sequence[np.ndarray], epsilon: float) -> np.ndarray:
    """One round of dynamic consensus for one agent

    Args:
        own: Own consensus state
        neighbor_consensus: Consensus states received over available edges
        neighbor_raw: Feasible raw estimates of the agent itself and its available neighbours
        epsilon: Step size, below 1 / (2 * max degree + 1) for stability

    Returns:
        np.ndarray: Next consensus state
    """
    own = np.asarray(own, dtype=float)
    drift = sum((np.asarray(c) - own for c in neighbor_consensus), np.zeros_like(own))
    drift = drift + sum((np.asarray(r) - own for r in neighbor_raw), np.zeros_like(own))
    return own + epsilon * drift


def convergence_indicator(theta_i: np.ndarray, neighbor_estimates: Sequence[np.ndarray],
                          previous: float = DEFAULT_PSI_MAX) -> float:
    """Mean squared Frobenius disagreement with the neighbours' estimates

    With no neighbour estimate the previous value is carried over.
    """
    if len(neighbor_estimates) == 0:
        return float(previous)
    return float(np.mean([np.sum((theta_i - theta_j) ** 2) for theta_j in neighbor_estimates]))


def bound_coefficients(B_i: np.ndarray, Phi_i: np.ndarray, B_neighbors: Sequence[np.ndarray],
                       Phi_neighbors: Sequence[np.ndarray], n_nodes: int, R: np.ndarray) -> Tuple[float, float]:
    """Scale c and offset b of the indicator bound psi <= c * delta + b (b is zero without noise)

    Args:
        B_i: Functional incidence block of agent i, N x N_ik
        Phi_i: RAL factor of agent i, D x N_ik
        B_neighbors: Blocks of the neighbours counted in the indicator
        Phi_neighbors: Their RAL factors
        n_nodes: Number of agents the tracking error averages over
        R: Measurement noise covariance

    Returns:
        tuple: (c, b)
    """
    count = len(B_neighbors)
    if count == 0:
        return float('nan'), float('nan')
    own = B_i @ Phi_i.T
    c = n_nodes / count * sum(float(np.sum((own - B_j @ Phi_j.T) ** 2)) for B_j, Phi_j in zip(B_neighbors, Phi_neighbors))
    own_norm = float(np.sum(Phi_i ** 2))
    b = float(np.trace(R)) / count * sum(own_norm + float(np.sum(Phi_j ** 2)) for Phi_j in Phi_neighbors)
    return c, b


def _sum_over_sources(values: np.ndarray, sources: np.ndarray, n_nodes: int) -> np.ndarray:
    """Sum per-edge D x D values (m, D, D) into their source agents (N, D, D)"""
    total = np.zeros((n_nodes,) + values.shape[1:])
    np.add.at(total, sources, values)
    return total


class ConsensusFilter:
    """Consensus states of all agents of one run"""

    def __init__(self, epsilon: float):
        self.epsilon = float(epsilon)
        self.state: Optional[np.ndarray] = None

    def reset(self):
        self.state = None

    def update(self, raw: np.ndarray, feasible: np.ndarray, fg: FunctionalGraph) -> np.ndarray:
        """Advance every agent one round with this step's raw estimates

        Args:
            raw: Raw transform estimates (N, D, D); rows of infeasible agents are ignored
            feasible: Feasibility of each raw estimate (N,)
            fg: Functional graph of the step

        Returns:
            np.ndarray: Updated consensus states (N, D, D)
        """
        graph = fg.graph
        if self.state is None:
            self.state = np.where(feasible[:, None, None], raw, 0.0)
        con = self.state
        mask = fg.edge_mask
        sources = graph.sources[mask]
        targets = graph.targets[mask]

        drift = _sum_over_sources(con[targets] - con[sources], sources, graph.n_nodes)
        heard_raw = feasible[targets]
        drift += _sum_over_sources(raw[targets[heard_raw]] - con[sources[heard_raw]],
                                   sources[heard_raw], graph.n_nodes)
        own_raw = feasible & fg.active_nodes
        drift[own_raw] += raw[own_raw] - con[own_raw]

        self.state = con + self.epsilon * drift
        return self.state
