"""
Relative-position observations and measurement noise.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np


class ObservationSource(str, Enum):
    MEASURED = 'measured'
    GEOMETRIC = 'geometric'


@dataclass(frozen=True, eq=False)
class Observation:
    edge: Tuple[int, int]
    value: np.ndarray
    covariance: np.ndarray
    source: ObservationSource = ObservationSource.MEASURED


def noise_factor(R: np.ndarray) -> np.ndarray:
    """Square-root factor S with S S^T = R; R may be singular (e.g. zero)"""
    R = np.asarray(R, dtype=float)
    values, vectors = np.linalg.eigh(0.5 * (R + R.T))
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def observe(truth: np.ndarray, R: np.ndarray, rng: np.random.Generator,
            edge: Tuple[int, int] = (0, 0)) -> Observation:
    """Measured observation truth + v with v ~ N(0, R)"""
    truth = np.asarray(truth, dtype=float)
    R = np.asarray(R, dtype=float)
    value = truth + noise_factor(R) @ rng.standard_normal(truth.shape[0])
    return Observation(edge, value, R, ObservationSource.MEASURED)


def measure_edges(Z: np.ndarray, B: np.ndarray, factor: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Noisy relative positions of every nominal edge, D x M

    `normals` holds standard normal draws of shape D x M; masking by availability is
    left to the caller so that the same draws serve every loss realization.
    """
    return Z @ B + factor @ normals


def noise_gram_check(R: np.ndarray, n: int, draws: int, rng: np.random.Generator) -> np.ndarray:
    """Empirical E[V^T V] for V with n i.i.d. N(0, R) columns; the exact value is tr(R) I_n"""
    R = np.asarray(R, dtype=float)
    factor = noise_factor(R)
    V = np.einsum('de,ten->tdn', factor, rng.standard_normal((draws, R.shape[0], n)))
    return np.einsum('tdi,tdj->ij', V, V) / draws
