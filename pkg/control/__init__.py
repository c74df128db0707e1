"""
Follower control laws and agent dynamics
"""
from .laws import (
    ConstantVelocity,
    ControlLaw,
    StabilityReport,
    StaticLeaders,
    VaryingVelocity,
    follower_input,
    make_control_law,
    stability_check,
    step_dynamics,
)

__all__ = [
    'ConstantVelocity',
    'ControlLaw',
    'StabilityReport',
    'StaticLeaders',
    'VaryingVelocity',
    'follower_input',
    'make_control_law',
    'stability_check',
    'step_dynamics',
]
