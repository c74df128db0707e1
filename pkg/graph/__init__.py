"""
Nominal/functional graphs, incidence matrices and edge-availability models
"""
from .nominal import (
    Edge,
    FunctionalGraph,
    NominalGraph,
    algebraic_connectivity,
    functional_incidence,
    incidence_blocks,
)
from .loss_models import (
    STREAM_INITIAL,
    STREAM_LOSSES,
    STREAM_NOISE,
    BernoulliLoss,
    LossModel,
    NodeDeparture,
    NoLoss,
    RunStreams,
    ScheduledLoss,
    ScheduleInterval,
    realize_functional,
)

__all__ = [
    'Edge',
    'FunctionalGraph',
    'NominalGraph',
    'algebraic_connectivity',
    'functional_incidence',
    'incidence_blocks',
    'STREAM_INITIAL',
    'STREAM_LOSSES',
    'STREAM_NOISE',
    'BernoulliLoss',
    'LossModel',
    'NodeDeparture',
    'NoLoss',
    'RunStreams',
    'ScheduledLoss',
    'ScheduleInterval',
    'realize_functional',
]
