"""
Numerical rank and the local geometric feasibility test.
"""
import numpy as np

from config import RANK_TOLERANCE


def numerical_rank(H: np.ndarray, tol: float = RANK_TOLERANCE) -> int:
    """Number of singular values above tol * largest singular value"""
    H = np.asarray(H, dtype=float)
    if H.size == 0:
        return 0
    s = np.linalg.svd(H, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def check_geometric_feasibility(P: np.ndarray, B_ik: np.ndarray) -> bool:
    """True iff H = P B_ik has full row rank D

    An agent needs observations of at least D neighbours in general position to
    recover the transform from its local relative positions.
    """
    H = np.asarray(P, dtype=float) @ np.asarray(B_ik, dtype=float)
    dim = H.shape[0]
    if H.ndim != 2 or H.shape[1] < dim:
        return False
    return numerical_rank(H) == dim
