"""
Stress matrices: the universal-rigidity certificate and the follower control gains.

Edge stresses w_ij live on the undirected edges; the stress matrix has [L]_ij = -w_ij
off the diagonal and row sums of zero. L must annihilate the all-ones vector and the
rows of the nominal configuration, be PSD, and have rank N - D - 1.

compute_stress searches the space of equilibrium stresses for the certificate whose
smallest positive eigenvalue is largest under a unit Frobenius norm, then rescales it to
||L||_F = N.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from config import (
    RANK_TOLERANCE,
    STRESS_EIGEN_TOLERANCE,
    STRESS_SEARCH_ITERATIONS,
    STRESS_SEARCH_RESTARTS,
    STRESS_SEARCH_SEED,
    SUCCESS_MESSAGES,
)
from formation.feasibility import numerical_rank
from formation.transforms import as_configuration
from graph.nominal import NominalGraph
from util.errors import ConfigurationError, NonGenericConfigurationError, NotUniversallyRigidError
from util.logger_module import logger


@dataclass(frozen=True, eq=False)
class StressMatrix:
    """Validated stress matrix of a framework"""

    matrix: np.ndarray
    graph: NominalGraph

    def __post_init__(self):
        L = np.array(self.matrix, dtype=float)
        L.setflags(write=False)
        object.__setattr__(self, 'matrix', L)

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def edge_weights(self) -> np.ndarray:
        """Stress w_ij = -[L]_ij of every directed edge, in edge-column order"""
        weights = -self.matrix[self.graph.sources, self.graph.targets]
        weights.setflags(write=False)
        return weights

    @cached_property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues in ascending order"""
        return np.linalg.eigvalsh(self.matrix)

    def smallest_positive_eigenvalue(self, dim: int) -> float:
        """lambda_{D+2}, the conditioning of the certificate"""
        return float(self.spectrum[dim + 1])

    def follower_block(self, leaders: Sequence[int]) -> np.ndarray:
        """Principal submatrix L_ff over the non-leader agents"""
        followers = np.setdiff1d(np.arange(self.n_nodes), np.asarray(leaders, dtype=int))
        return self.matrix[np.ix_(followers, followers)]

    def as_list(self):
        return self.matrix.tolist()


def stress_from_weights(g: NominalGraph, weights: np.ndarray) -> np.ndarray:
    """Stress matrix from undirected edge stresses (ordered as g.undirected_edges)"""
    L = np.zeros((g.n_nodes, g.n_nodes))
    pairs = np.array(g.undirected_edges, dtype=int).reshape(-1, 2)
    L[pairs[:, 0], pairs[:, 1]] = -weights
    L[pairs[:, 1], pairs[:, 0]] = -weights
    L[np.diag_indices(g.n_nodes)] = -L.sum(axis=1)
    return L


def equilibrium_operator(g: NominalGraph, P: np.ndarray) -> np.ndarray:
    """Map from undirected edge stresses to stacked net forces sum_j w_ij (p_i - p_j)

    Returns:
        np.ndarray: Matrix of shape (N*D, number of undirected edges); rows are agent-major
    """
    dim, n = P.shape
    A = np.zeros((n * dim, len(g.undirected_edges)))
    for e, (i, j) in enumerate(g.undirected_edges):
        diff = P[:, i] - P[:, j]
        A[i * dim:(i + 1) * dim, e] = diff
        A[j * dim:(j + 1) * dim, e] = -diff
    return A


def _affine_complement(P: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of span(1, rows of P)"""
    dim, n = P.shape
    augmented = np.vstack([np.ones((1, n)), P])
    if numerical_rank(augmented) < dim + 1:
        raise NonGenericConfigurationError(
            f"the {n} nominal points span an affine subspace of dimension below {dim}"
        )
    return null_space(augmented)


def _maximize_min_eigenvalue(blocks: np.ndarray, rng: np.random.Generator,
                             iterations: int, restarts: int):
    """Projected supergradient ascent of lambda_min(sum_a d_a M_a) over the unit ball

    The blocks are whitened so that ||sum_a d_a M_a||_F = ||d||.
    """
    r = blocks.shape[0]

    def objective(d):
        values, vectors = np.linalg.eigh(np.tensordot(d, blocks, axes=1))
        return values[0], vectors[:, 0]

    if r == 1:
        candidates = [np.array([1.0]), np.array([-1.0])]
        scores = [objective(d)[0] for d in candidates]
        best = int(np.argmax(scores))
        return candidates[best], scores[best]

    best_d, best_value = None, -np.inf
    for _ in range(restarts):
        d = rng.standard_normal(r)
        d /= np.linalg.norm(d)
        for t in range(iterations):
            value, v = objective(d)
            if value > best_value:
                best_d, best_value = d.copy(), value
            g = np.einsum('i,aij,j->a', v, blocks, v)
            norm = np.linalg.norm(g)
            if norm == 0.0:
                break
            d = d + (0.2 / np.sqrt(t + 1.0)) * g / norm
            length = np.linalg.norm(d)
            if length > 1.0:
                d /= length
        value, _ = objective(d)
        if value > best_value:
            best_d, best_value = d.copy(), value
    return best_d, best_value


def compute_stress(g: NominalGraph, P, iterations: int = STRESS_SEARCH_ITERATIONS,
                   restarts: int = STRESS_SEARCH_RESTARTS, seed: int = STRESS_SEARCH_SEED) -> StressMatrix:
    """Best-conditioned PSD stress matrix of rank N - D - 1

    Args:
        g: Nominal graph
        P: Nominal configuration (D x N)
        iterations: Ascent steps per restart
        restarts: Random restarts of the ascent
        seed: Seed of the restart directions

    Returns:
        StressMatrix: Certificate normalized to ||L||_F = N

    Raises:
        NonGenericConfigurationError: The nominal points are affinely degenerate
        NotUniversallyRigidError: No PSD stress of the required rank exists
    """
    P = as_configuration(P, g.n_nodes)
    dim, n = P.shape
    U = _affine_complement(P)
    if U.shape[1] == 0:
        raise ConfigurationError(f"{n} agents in {dim}-D leave no room for a stress matrix; need at least {dim + 2}")

    A = equilibrium_operator(g, P)
    basis = null_space(A)
    r = basis.shape[1]
    logger.debug(f"Equilibrium stress space has dimension {r} ({len(g.undirected_edges)} edges)")
    if r == 0:
        raise NotUniversallyRigidError("the framework admits no non-zero equilibrium stress")

    candidates = np.stack([stress_from_weights(g, basis[:, a]) for a in range(r)])
    gram = np.einsum('aij,bij->ab', candidates, candidates)
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    keep = eigenvalues > RANK_TOLERANCE * eigenvalues[-1]
    whitening = eigenvectors[:, keep] / np.sqrt(eigenvalues[keep])
    whitened = np.einsum('ab,aij->bij', whitening, candidates)
    reduced = np.einsum('ip,bij,jq->bpq', U, whitened, U)

    rng = np.random.default_rng(seed)
    d, value = _maximize_min_eigenvalue(reduced, rng, iterations, restarts)
    if d is None or value <= STRESS_EIGEN_TOLERANCE:
        raise NotUniversallyRigidError(
            f"best equilibrium stress has smallest positive-part eigenvalue {value:.3e}"
        )

    L = np.tensordot(d, whitened, axes=1)
    L = 0.5 * (L + L.T)
    L *= n / np.linalg.norm(L)
    stress = StressMatrix(L, g)
    logger.info(SUCCESS_MESSAGES['stress_ready'].format(value=stress.smallest_positive_eigenvalue(dim)))
    return stress


def validate_stress(L, g: NominalGraph, P, tol: float = 1e-10) -> StressMatrix:
    """Check an explicit stress matrix against the framework; no rescaling

    Raises:
        ConfigurationError: Wrong shape, asymmetry, off-graph entries or broken equilibrium
        NotUniversallyRigidError: Not PSD or wrong rank
    """
    P = as_configuration(P, g.n_nodes)
    dim, n = P.shape
    L = np.array(L, dtype=float)
    if L.shape != (n, n):
        raise ConfigurationError(f"stress matrix has shape {L.shape}, expected ({n}, {n})")
    scale = max(np.linalg.norm(L), 1.0)
    problems = []
    if not np.allclose(L, L.T, rtol=0.0, atol=tol * scale):
        problems.append("stress matrix is not symmetric")
    allowed = np.eye(n, dtype=bool)
    allowed[g.sources, g.targets] = True
    off_graph = np.argwhere(~allowed & (np.abs(L) > tol * scale))
    if off_graph.size:
        i, j = off_graph[0]
        problems.append(f"stress matrix has entry ({i + 1}, {j + 1}) outside the graph")
    if np.linalg.norm(L @ np.ones(n)) > tol * scale or np.linalg.norm(L @ P.T) > tol * scale:
        problems.append("stress matrix does not annihilate the nominal configuration")
    if problems:
        raise ConfigurationError("; ".join(problems))

    spectrum = np.linalg.eigvalsh(0.5 * (L + L.T))
    threshold = STRESS_EIGEN_TOLERANCE * np.abs(spectrum).max()
    if spectrum[0] < -threshold:
        raise NotUniversallyRigidError(f"stress matrix has a negative eigenvalue {spectrum[0]:.3e}")
    rank = int(np.count_nonzero(spectrum > threshold))
    if rank != n - dim - 1:
        raise NotUniversallyRigidError(f"stress matrix has rank {rank}, need {n - dim - 1}")
    return StressMatrix(L, g)


def resolve_stress(g: NominalGraph, P, explicit: Optional[np.ndarray] = None) -> StressMatrix:
    """Explicit stress when given, computed certificate otherwise"""
    if explicit is None:
        return compute_stress(g, P)
    return validate_stress(explicit, g, P)
