"""
Configurations, affine transforms, target trajectories and stress certificates
"""
from .transforms import SUPPORTED_DIMENSIONS, AffineTransform, as_configuration, rotation_2d, target_configuration
from .trajectory import (
    INTERPOLATION_MODES,
    TrajectorySegment,
    TrajectorySpec,
    constant_velocity_target,
    default_maneuver,
    evaluate_trajectory,
    static_target,
)
from .feasibility import check_geometric_feasibility, numerical_rank
from .stress import StressMatrix, compute_stress, equilibrium_operator, resolve_stress, validate_stress
from .library import Framework, available_frameworks, get_framework

__all__ = [
    # Transforms
    'SUPPORTED_DIMENSIONS',
    'AffineTransform',
    'as_configuration',
    'rotation_2d',
    'target_configuration',

    # Trajectories
    'INTERPOLATION_MODES',
    'TrajectorySegment',
    'TrajectorySpec',
    'constant_velocity_target',
    'default_maneuver',
    'evaluate_trajectory',
    'static_target',

    # Feasibility
    'check_geometric_feasibility',
    'numerical_rank',

    # Stress
    'StressMatrix',
    'compute_stress',
    'equilibrium_operator',
    'resolve_stress',
    'validate_stress',

    # Frameworks
    'Framework',
    'available_frameworks',
    'get_framework',
]
