"""
Configuration package for affine_swarm.

Re-exports all configuration constants and helper functions for easy import.
"""
from .config import (
    # Timestamp & Naming
    TIMESTAMP_FORMAT,
    PROJECT_NAME,

    # Directory Paths
    OUTPUT_DIR,
    LOGS_DIR,
    SCENARIO_DIR,

    # Output Files
    METRICS_FILE,
    SUMMARY_FILE,
    RESOLVED_SCENARIO_FILE,
    JSON_EXTENSION,

    # Environment Variables
    THREADS_ENV_VAR,
    LOG_TIMESTAMP_ENV_VAR,

    # Simulation Defaults
    DEFAULT_DT,
    DEFAULT_HORIZON,
    DEFAULT_SIGMA_V,
    DEFAULT_MONTE_CARLO_RUNS,
    DEFAULT_SEED,
    DEFAULT_LOG_STRIDE,
    DEFAULT_DIVERGENCE_THRESHOLD,
    DEFAULT_INITIAL_RADIUS,
    STEADY_STATE_FRACTION,
    DEPARTURE_MOTIONS,

    # Numerical Tolerances
    RANK_TOLERANCE,
    MAX_CONDITION_NUMBER,
    STRESS_EIGEN_TOLERANCE,
    STRESS_SEARCH_ITERATIONS,
    STRESS_SEARCH_RESTARTS,
    STRESS_SEARCH_SEED,

    # Control Defaults
    CONTROL_LAWS,
    DEFAULT_CONTROL_LAW,
    DEFAULT_ALPHA,
    DEFAULT_ETA,
    DEFAULT_GAMMA,

    # Estimator Defaults
    ESTIMATORS,
    CONSTRAINT_MODES,
    GEOMETRY_SOURCES,
    DEFAULT_ESTIMATOR,
    DEFAULT_SIGMA_W,
    DEFAULT_KAPPA,
    DEFAULT_EPSILON,
    DEFAULT_PSI_MAX,
    INITIAL_COVARIANCE_DIAGONAL,

    # Experiment Presets
    LAMBDA_GRID,
    SWEEP_ESTIMATORS,

    # Error & Success Messages
    ERROR_MESSAGES,
    SUCCESS_MESSAGES,

    # Logging Settings
    LOG_FILE_FORMAT,
    LOG_FORMAT,

    # Response Helpers
    success_response,
    error_response,

    # Path Helpers
    get_scenario_path,
    get_run_output_dir,
)

__all__ = [
    # Timestamp & Naming
    'TIMESTAMP_FORMAT',
    'PROJECT_NAME',

    # Directory Paths
    'OUTPUT_DIR',
    'LOGS_DIR',
    'SCENARIO_DIR',

    # Output Files
    'METRICS_FILE',
    'SUMMARY_FILE',
    'RESOLVED_SCENARIO_FILE',
    'JSON_EXTENSION',

    # Environment Variables
    'THREADS_ENV_VAR',
    'LOG_TIMESTAMP_ENV_VAR',

    # Simulation Defaults
    'DEFAULT_DT',
    'DEFAULT_HORIZON',
    'DEFAULT_SIGMA_V',
    'DEFAULT_MONTE_CARLO_RUNS',
    'DEFAULT_SEED',
    'DEFAULT_LOG_STRIDE',
    'DEFAULT_DIVERGENCE_THRESHOLD',
    'DEFAULT_INITIAL_RADIUS',
    'STEADY_STATE_FRACTION',
    'DEPARTURE_MOTIONS',

    # Numerical Tolerances
    'RANK_TOLERANCE',
    'MAX_CONDITION_NUMBER',
    'STRESS_EIGEN_TOLERANCE',
    'STRESS_SEARCH_ITERATIONS',
    'STRESS_SEARCH_RESTARTS',
    'STRESS_SEARCH_SEED',

    # Control Defaults
    'CONTROL_LAWS',
    'DEFAULT_CONTROL_LAW',
    'DEFAULT_ALPHA',
    'DEFAULT_ETA',
    'DEFAULT_GAMMA',

    # Estimator Defaults
    'ESTIMATORS',
    'CONSTRAINT_MODES',
    'GEOMETRY_SOURCES',
    'DEFAULT_ESTIMATOR',
    'DEFAULT_SIGMA_W',
    'DEFAULT_KAPPA',
    'DEFAULT_EPSILON',
    'DEFAULT_PSI_MAX',
    'INITIAL_COVARIANCE_DIAGONAL',

    # Experiment Presets
    'LAMBDA_GRID',
    'SWEEP_ESTIMATORS',

    # Error & Success Messages
    'ERROR_MESSAGES',
    'SUCCESS_MESSAGES',

    # Logging Settings
    'LOG_FILE_FORMAT',
    'LOG_FORMAT',

    # Response Helpers
    'success_response',
    'error_response',

    # Path Helpers
    'get_scenario_path',
    'get_run_output_dir',
]
