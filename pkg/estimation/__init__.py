"""
Observation model, relative Kalman filtering, relative affine localization,
consensus filtering and the estimators built from them
"""
from .observation import Observation, ObservationSource, measure_edges, noise_factor, noise_gram_check, observe
from .kalman import EdgeFilterState, FilterBank, KinematicModel, check_covariance, rkf_step
from .ral import constrained_covariance, constrained_ral, ral_covariance, ral_estimate, ral_factor, ral_reconstruct
from .consensus import ConsensusFilter, bound_coefficients, consensus_step, convergence_indicator
from .geometry import GeometrySnapshot, LocalGeometry
from .estimators import (
    BRANCHES,
    ConRALEstimator,
    EstimateResult,
    Estimator,
    EstimatorSettings,
    GARKFEstimator,
    NoEstimator,
    RALEstimator,
    RKFEstimator,
    conral_step,
    ga_rkf_pseudo_observations,
    ga_rkf_step,
    make_estimator,
)

__all__ = [
    # Observations
    'Observation',
    'ObservationSource',
    'measure_edges',
    'noise_factor',
    'noise_gram_check',
    'observe',

    # Kalman filtering
    'EdgeFilterState',
    'FilterBank',
    'KinematicModel',
    'check_covariance',
    'rkf_step',

    # Relative affine localization
    'constrained_covariance',
    'constrained_ral',
    'ral_covariance',
    'ral_estimate',
    'ral_factor',
    'ral_reconstruct',

    # Consensus and indicator
    'ConsensusFilter',
    'bound_coefficients',
    'consensus_step',
    'convergence_indicator',
    'GeometrySnapshot',
    'LocalGeometry',

    # Estimators
    'BRANCHES',
    'ConRALEstimator',
    'EstimateResult',
    'Estimator',
    'EstimatorSettings',
    'GARKFEstimator',
    'NoEstimator',
    'RALEstimator',
    'RKFEstimator',
    'conral_step',
    'ga_rkf_pseudo_observations',
    'ga_rkf_step',
    'make_estimator',
]
