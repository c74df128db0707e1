"""
Piecewise target trajectories in transform space.

Each segment ends at a given AffineTransform and starts where the previous one ended,
so the path is continuous by construction. Rotation-geodesic segments split each
endpoint with a polar decomposition: the rotation factor is interpolated along the
geodesic (angle for D = 2, slerp for D = 3) and the symmetric factor and the translation
linearly.
"""
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.linalg import polar
from scipy.spatial.transform import Rotation, Slerp

from config import ERROR_MESSAGES
from formation.transforms import AffineTransform, rotation_2d
from util.errors import ConfigurationError

INTERPOLATION_MODES = ('linear', 'rotation-geodesic')


@dataclass(frozen=True)
class TrajectorySegment:
    duration: float
    end: AffineTransform
    mode: str = 'linear'

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigurationError(f"trajectory segment duration must be positive, got {self.duration}")
        if self.mode not in INTERPOLATION_MODES:
            raise ConfigurationError(
                f"trajectory segment mode must be one of {', '.join(INTERPOLATION_MODES)}, got {self.mode!r}"
            )


@dataclass(frozen=True)
class TrajectorySpec:
    segments: Tuple[TrajectorySegment, ...]
    initial: AffineTransform

    def __post_init__(self):
        object.__setattr__(self, 'segments', tuple(self.segments))
        if not self.segments:
            raise ConfigurationError("trajectory needs at least one segment")
        for segment in self.segments:
            if segment.end.dim != self.initial.dim:
                raise ConfigurationError(
                    ERROR_MESSAGES['dimension_mismatch'].format(
                        detail=f"segment transform is {segment.end.dim}-D, trajectory is {self.initial.dim}-D"
                    )
                )

    @property
    def dim(self) -> int:
        return self.initial.dim

    @cached_property
    def boundaries(self) -> Tuple[float, ...]:
        """Start time of every segment followed by the horizon"""
        return tuple(np.concatenate(([0.0], np.cumsum([s.duration for s in self.segments]))).tolist())

    @property
    def horizon(self) -> float:
        return self.boundaries[-1]

    def start_of(self, index: int) -> AffineTransform:
        return self.initial if index == 0 else self.segments[index - 1].end

    def as_dict(self) -> dict:
        return {
            'initial': self.initial.as_dict(),
            'segments': [
                {'duration': s.duration, 'mode': s.mode, **s.end.as_dict()} for s in self.segments
            ],
        }


def _rotation_angle(rotation: np.ndarray) -> float:
    return float(np.arctan2(rotation[1, 0], rotation[0, 0]))


def _interpolate_geodesic(start: AffineTransform, end: AffineTransform, s: float) -> np.ndarray:
    u0, p0 = polar(start.theta)
    u1, p1 = polar(end.theta)
    if np.linalg.det(u0) < 0 or np.linalg.det(u1) < 0:
        # reflections have no rotation geodesic
        return (1.0 - s) * start.theta + s * end.theta
    stretch = (1.0 - s) * p0 + s * p1
    if start.dim == 2:
        phi0 = _rotation_angle(u0)
        delta = _rotation_angle(u1) - phi0
        delta = (delta + np.pi) % (2.0 * np.pi) - np.pi
        if np.isclose(delta, -np.pi):
            delta = np.pi
        return rotation_2d(phi0 + s * delta) @ stretch
    slerp = Slerp([0.0, 1.0], Rotation.from_matrix(np.stack([u0, u1])))
    return slerp([s]).as_matrix()[0] @ stretch


def evaluate_trajectory(spec: TrajectorySpec, time: float) -> AffineTransform:
    """Target transform at `time` seconds

    Args:
        spec: Trajectory specification
        time: Time in [0, horizon]

    Returns:
        AffineTransform: Interpolated transform

    Raises:
        ConfigurationError: time outside [0, horizon]
    """
    horizon = spec.horizon
    slack = 1e-9 * max(1.0, horizon)
    if time < -slack or time > horizon + slack:
        raise ConfigurationError(ERROR_MESSAGES['time_out_of_range'].format(time=time, horizon=horizon))
    time = min(max(time, 0.0), horizon)

    bounds = spec.boundaries
    index = min(bisect_right(bounds, time) - 1, len(spec.segments) - 1)
    segment = spec.segments[index]
    start = spec.start_of(index)
    s = (time - bounds[index]) / segment.duration
    if s <= 0.0:
        return start
    if s >= 1.0:
        return segment.end

    translation = (1.0 - s) * start.translation + s * segment.end.translation
    if segment.mode == 'rotation-geodesic':
        theta = _interpolate_geodesic(start, segment.end, s)
    else:
        theta = (1.0 - s) * start.theta + s * segment.end.theta
    return AffineTransform(theta, translation)


def static_target(horizon: float, dim: int = 2) -> TrajectorySpec:
    """Target fixed at the nominal configuration for the whole run"""
    identity = AffineTransform.identity(dim)
    return TrajectorySpec((TrajectorySegment(horizon, identity),), identity)


def constant_velocity_target(horizon: float, velocity) -> TrajectorySpec:
    """Pure translation at constant velocity"""
    velocity = np.asarray(velocity, dtype=float)
    dim = velocity.shape[0]
    end = AffineTransform(np.eye(dim), velocity * horizon)
    return TrajectorySpec((TrajectorySegment(horizon, end),), AffineTransform.identity(dim))


# Reconstructed maneuver: translate, shrink to half size and back while translating,
# quarter turn while translating, final translation. Durations are fractions of 60 s.
_MANEUVER = (
    (15.0, 1.0, 0.0, (10.0, 0.0), 'linear'),
    (10.0, 0.5, 0.0, (16.0, 0.0), 'linear'),
    (10.0, 1.0, 0.0, (22.0, 0.0), 'linear'),
    (15.0, 1.0, 0.5 * np.pi, (30.0, 6.0), 'rotation-geodesic'),
    (10.0, 1.0, 0.5 * np.pi, (30.0, 14.0), 'linear'),
)


def default_maneuver(horizon: float = 60.0) -> TrajectorySpec:
    """Five-segment 2-D maneuver used by the shipped experiments, stretched to `horizon`"""
    total = sum(row[0] for row in _MANEUVER)
    segments = []
    for duration, scale, angle, translation, mode in _MANEUVER:
        end = AffineTransform(scale * rotation_2d(angle), np.array(translation, dtype=float))
        segments.append(TrajectorySegment(duration * horizon / total, end, mode))
    return TrajectorySpec(tuple(segments), AffineTransform.identity(2))
