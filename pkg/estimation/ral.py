"""
Relative affine localization (RAL).

Agent i stacks its observed relative positions as Y (D x n) and the matching nominal
relative positions as H = P B_ik (D x n). The least-squares transform is
Theta = Y Phi^T with Phi = (H H^T)^-1 H, defined when H has full row rank.
Constrained variants restrict Theta to scalings, rotations or similarities and work
with a single observation.
"""
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import LinAlgError, block_diag, cho_factor, cho_solve

from config import CONSTRAINT_MODES, MAX_CONDITION_NUMBER
from formation.feasibility import numerical_rank
from util.errors import ConfigurationError


def ral_factor(H: np.ndarray) -> Optional[np.ndarray]:
    """Phi = (H H^T)^-1 H, or None when H is rank deficient or badly conditioned"""
    H = np.asarray(H, dtype=float)
    dim = H.shape[0]
    if H.shape[1] < dim or numerical_rank(H) < dim:
        return None
    gram = H @ H.T
    if np.linalg.cond(gram) > MAX_CONDITION_NUMBER:
        return None
    try:
        return cho_solve(cho_factor(gram), H)
    except LinAlgError:
        return None


def ral_estimate(Y: np.ndarray, H: np.ndarray) -> Optional[np.ndarray]:
    """Least-squares Theta minimizing ||Theta H - Y||_F; None when infeasible"""
    Phi = ral_factor(H)
    if Phi is None:
        return None
    return np.asarray(Y, dtype=float) @ Phi.T


def ral_reconstruct(theta: np.ndarray, p_ij: np.ndarray) -> np.ndarray:
    """Geometric estimate Theta p_ij of a relative position"""
    return np.asarray(theta) @ np.asarray(p_ij)


def ral_covariance(Phi: np.ndarray, p_ij: np.ndarray,
                   R: Union[np.ndarray, Sequence[np.ndarray]]) -> np.ndarray:
    """Covariance of Theta p_ij induced by the observation noise

    R is either one D x D covariance shared by every observation or one per observed
    edge. The estimate is Y a with a = Phi^T p_ij, so its covariance is
    (a^T (x) I_D) blkdiag(R_1..R_n) (a (x) I_D).
    """
    Phi = np.asarray(Phi, dtype=float)
    dim, n = Phi.shape
    a = Phi.T @ np.asarray(p_ij, dtype=float)
    R = np.asarray(R, dtype=float)
    blocks = [R] * n if R.ndim == 2 else list(R)
    selector = np.kron(a[None, :], np.eye(dim))
    return selector @ block_diag(*blocks) @ selector.T


def _procrustes_rotation(M: np.ndarray) -> np.ndarray:
    """Proper rotation U V^T maximizing tr(Theta^T M), M = U S V^T"""
    U, _, Vt = np.linalg.svd(M)
    flip = np.ones(M.shape[0])
    flip[-1] = np.sign(np.linalg.det(U @ Vt)) or 1.0
    return (U * flip) @ Vt


def constrained_ral(Y: np.ndarray, H: np.ndarray, constraint: str) -> Optional[np.ndarray]:
    """Transform estimate restricted to a family of transforms

    Args:
        Y: Observed relative positions, D x n
        H: Nominal relative positions, D x n
        constraint: 'affine', 'scaling', 'rotation' or 'similarity'

    Returns:
        np.ndarray or None: D x D estimate; None when the constraint cannot be solved
    """
    Y = np.asarray(Y, dtype=float)
    H = np.asarray(H, dtype=float)
    if constraint == 'affine':
        return ral_estimate(Y, H)
    if constraint not in CONSTRAINT_MODES:
        raise ConfigurationError(f"estimator.constraint must be one of {', '.join(CONSTRAINT_MODES)}, got '{constraint}'")
    if H.shape[1] == 0:
        return None

    if constraint == 'scaling':
        energy = np.sum(H * H, axis=1)
        if np.any(energy <= np.finfo(float).eps * max(float(energy.max()), 1.0)):
            return None
        return np.diag(np.sum(Y * H, axis=1) / energy)

    rotation = _procrustes_rotation(Y @ H.T)
    if constraint == 'rotation':
        return rotation

    rank = numerical_rank(H)
    if rank == 0:
        return None
    sigma_h = np.linalg.svd(H, compute_uv=False)[:rank]
    sigma_y = np.linalg.svd(Y, compute_uv=False)[:rank]
    scale = float(np.mean(sigma_y / sigma_h))
    return scale * rotation


def constrained_variance_factor(p_ij: np.ndarray, H: np.ndarray) -> np.ndarray:
    """||p_ij||^2 / ||H||_F^2 for one relative position (D,) or one per column (D x n)"""
    p_ij = np.asarray(p_ij, dtype=float)
    H = np.asarray(H, dtype=float)
    return np.sum(p_ij * p_ij, axis=0) / float(np.sum(H * H))


def constrained_covariance(p_ij: np.ndarray, H: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Pseudo-observation covariance of the constrained modes, (||p_ij||^2 / ||H||_F^2) R"""
    return float(constrained_variance_factor(p_ij, H)) * np.asarray(R, dtype=float)
