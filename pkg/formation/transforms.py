"""
Configurations and affine transformations.

A configuration is a D x N array whose column i is agent i's position; the nominal
configuration P, the target Z* and the simulated Z all share this layout.
"""
from dataclasses import dataclass

import numpy as np

from config import ERROR_MESSAGES
from util.errors import ConfigurationError

SUPPORTED_DIMENSIONS = (2, 3)


def as_configuration(points, n_nodes=None) -> np.ndarray:
    """Validate and return a configuration as a float D x N array"""
    P = np.array(points, dtype=float)
    if P.ndim != 2 or P.shape[0] not in SUPPORTED_DIMENSIONS:
        raise ConfigurationError(
            ERROR_MESSAGES['dimension_mismatch'].format(detail=f"configuration must be D x N with D in 2..3, got {P.shape}")
        )
    if n_nodes is not None and P.shape[1] != n_nodes:
        raise ConfigurationError(
            ERROR_MESSAGES['dimension_mismatch'].format(detail=f"configuration has {P.shape[1]} columns for {n_nodes} nodes")
        )
    if not np.all(np.isfinite(P)):
        raise ConfigurationError("configuration contains non-finite coordinates")
    return P


def rotation_2d(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, eq=False)
class AffineTransform:
    """Pair (theta, translation) mapping nominal positions p to theta @ p + translation"""

    theta: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        translation = np.array(self.translation, dtype=float).reshape(-1)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1] or translation.shape != (theta.shape[0],):
            raise ConfigurationError(
                ERROR_MESSAGES['dimension_mismatch'].format(
                    detail=f"theta {theta.shape} and translation {translation.shape}"
                )
            )
        theta.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, 'theta', theta)
        object.__setattr__(self, 'translation', translation)

    @classmethod
    def identity(cls, dim: int = 2) -> "AffineTransform":
        return cls(np.eye(dim), np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.theta.shape[0]

    def compose(self, inner: "AffineTransform") -> "AffineTransform":
        """self after inner"""
        return AffineTransform(self.theta @ inner.theta, self.theta @ inner.translation + self.translation)

    def allclose(self, other: "AffineTransform", atol: float = 1e-12) -> bool:
        return bool(
            np.allclose(self.theta, other.theta, rtol=0.0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=atol)
        )

    def as_dict(self) -> dict:
        return {'theta': self.theta.tolist(), 'translation': self.translation.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "AffineTransform":
        return cls(data['theta'], data['translation'])


def target_configuration(P: np.ndarray, a: AffineTransform) -> np.ndarray:
    """Z* = theta @ P + t 1^T"""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != a.dim:
        raise ConfigurationError(
            ERROR_MESSAGES['dimension_mismatch'].format(
                detail=f"configuration of shape {P.shape} for a {a.dim}-D transform"
            )
        )
    return a.theta @ P + a.translation[:, None]
