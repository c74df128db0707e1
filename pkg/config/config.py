"""
Global configuration and constants for the affine_swarm simulator.

This module centralizes all magic numbers, file names, numerical tolerances and
default parameters used throughout the project.
"""
from pathlib import Path

# ============================================================================
# TIMESTAMP & NAMING
# ============================================================================
TIMESTAMP_FORMAT = '%Y%m%d_%H%M%S'
"""Standard timestamp format used for log files and default output folders"""

PROJECT_NAME = 'affine_swarm'
"""Logger name and banner title"""

# ============================================================================
# DIRECTORY PATHS
# ============================================================================
OUTPUT_DIR = Path('Results')
"""Base directory for experiment outputs"""

LOGS_DIR = Path('logs')
"""Base directory for application logs"""

SCENARIO_DIR = Path(__file__).resolve().parent / 'scenarios'
"""Shipped reference scenario files"""

# ============================================================================
# OUTPUT FILES
# ============================================================================
METRICS_FILE = 'metrics.csv'
"""Per-step metric stream (long format, one row per run and logged step)"""

SUMMARY_FILE = 'summary.json'
"""Per-scenario aggregates"""

RESOLVED_SCENARIO_FILE = 'scenario.resolved.json'
"""Fully expanded scenario, loadable again for provenance"""

JSON_EXTENSION = '.json'

# ============================================================================
# ENVIRONMENT VARIABLES
# ============================================================================
THREADS_ENV_VAR = 'AFFINE_SWARM_THREADS'
"""Caps the number of worker processes of a Monte Carlo batch"""

LOG_TIMESTAMP_ENV_VAR = 'AFFINE_SWARM_LOG_TIMESTAMP'
"""Shares the log file name with worker processes"""

# ============================================================================
# SIMULATION DEFAULTS
# ============================================================================
DEFAULT_DT = 0.01
"""Integration step (seconds)"""

DEFAULT_HORIZON = 60.0
"""Run length (seconds)"""

DEFAULT_SIGMA_V = 0.1
"""Standard deviation of relative-position measurement noise"""

DEFAULT_MONTE_CARLO_RUNS = 50
DEFAULT_SEED = 2024
DEFAULT_LOG_STRIDE = 10
"""Metrics are logged every DEFAULT_LOG_STRIDE steps (and at the last step)"""

DEFAULT_DIVERGENCE_THRESHOLD = 1e6
"""A run whose tracking error exceeds this value is flagged and stopped"""

DEFAULT_INITIAL_RADIUS = 1.0
"""Radius of the uniform initial perturbation around the target configuration"""

STEADY_STATE_FRACTION = 0.1
"""Steady-state error is averaged over this trailing fraction of the horizon"""

DEPARTURE_MOTIONS = ('frozen', 'exit')

# ============================================================================
# NUMERICAL TOLERANCES
# ============================================================================
RANK_TOLERANCE = 1e-8
"""Singular values below RANK_TOLERANCE * largest are treated as zero"""

MAX_CONDITION_NUMBER = 1e12
"""H H^T with a larger condition number is treated as infeasible"""

STRESS_EIGEN_TOLERANCE = 1e-8
"""Relative threshold for the positive spectrum of a stress certificate"""

STRESS_SEARCH_ITERATIONS = 1500
STRESS_SEARCH_RESTARTS = 4
STRESS_SEARCH_SEED = 7

# ============================================================================
# CONTROL DEFAULTS
# ============================================================================
CONTROL_LAWS = ('static-leaders', 'constant-velocity', 'varying-velocity')
DEFAULT_CONTROL_LAW = 'static-leaders'
DEFAULT_ALPHA = 1.0
DEFAULT_ETA = 0.2
DEFAULT_GAMMA = 'stress'
"""'stress' sets gamma_i to the diagonal entry of the stress matrix"""

# ============================================================================
# ESTIMATOR DEFAULTS
# ============================================================================
ESTIMATORS = ('none', 'rkf', 'ral', 'conral', 'ga-rkf')
CONSTRAINT_MODES = ('affine', 'scaling', 'rotation', 'similarity')
GEOMETRY_SOURCES = ('raw', 'consensus')

DEFAULT_ESTIMATOR = 'none'
DEFAULT_SIGMA_W = 1.0
"""Acceleration uncertainty of the constant-acceleration edge model"""

DEFAULT_KAPPA = 1.0
"""Scale of the indicator penalty on pseudo-observation covariance"""

DEFAULT_EPSILON = 0.05
"""Consensus step size"""

DEFAULT_PSI_MAX = 1e3
"""Indicator value used before an agent has heard from any neighbour"""

INITIAL_COVARIANCE_DIAGONAL = (1.0, 10.0, 100.0)
"""Position, velocity, acceleration variances of a fresh edge filter"""

# ============================================================================
# EXPERIMENT PRESETS
# ============================================================================
LAMBDA_GRID = tuple(round(0.1 * k, 1) for k in range(1, 11))
"""Bernoulli availability grid of the lambda sweep"""

SWEEP_ESTIMATORS = ('none', 'conral', 'rkf', 'ga-rkf')

# ============================================================================
# ERROR MESSAGES
# ============================================================================
ERROR_MESSAGES = {
    'file_not_found': 'File not found: {path}',
    'parse_error': 'Cannot parse {path}: {reason} (line {line}, column {column})',
    'invalid_scenario': 'Scenario {name} has {count} problem(s)',
    'unknown_preset': 'Unknown preset "{name}". Available: {available}',
    'not_universally_rigid': 'Framework is not universally rigid: {reason}',
    'non_generic': 'Non-generic configuration: {reason}',
    'dimension_mismatch': 'Dimension mismatch: {detail}',
    'schedule_gap': 'No schedule interval covers step {step}',
    'missing_estimate': 'No estimate for edge ({i}, {j}) required by the control law',
    'covariance_not_psd': 'Covariance is not positive semidefinite (min eigenvalue {value:.3e})',
    'time_out_of_range': 'Time {time} outside trajectory range [0, {horizon}]',
    'empty_active_set': 'Tracking error requested over an empty set of agents',
}

# ============================================================================
# SUCCESS MESSAGES
# ============================================================================
SUCCESS_MESSAGES = {
    'scenario_valid': 'Scenario {name} is valid',
    'experiment_done': '{count} scenario(s) finished, results in {path}',
    'stress_ready': 'Stress matrix ready (lambda_min+ = {value:.4f})',
}

# ============================================================================
# LOGGING SETTINGS
# ============================================================================
LOG_FILE_FORMAT = '{timestamp}.log'
"""Format for log filenames"""

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


# ============================================================================
# RESPONSE SCHEMAS
# ============================================================================
def success_response(data=None, **kwargs):
    """
    Create standardized success response.

    Args:
        data: Optional data payload
        **kwargs: Additional fields to include

    Returns:
        dict: Success response dictionary
    """
    response = {'success': True}
    if data is not None:
        response['data'] = data
    response.update(kwargs)
    return response


def error_response(error, message=None, **kwargs):
    """
    Create standardized error response.

    Args:
        error: Error message or exception
        message: Optional user-friendly message
        **kwargs: Additional fields to include (e.g. a list of problems)

    Returns:
        dict: Error response dictionary
    """
    response = {
        'success': False,
        'error': str(error),
        'message': message or str(error)
    }
    response.update(kwargs)
    return response


# ============================================================================
# PATH HELPERS
# ============================================================================
def get_scenario_path(name):
    """
    Resolve a shipped scenario file by name.

    Args:
        name: File stem or file name inside config/scenarios

    Returns:
        Path: Path to config/scenarios/{name}.json
    """
    path = SCENARIO_DIR / name
    if path.suffix != JSON_EXTENSION:
        path = path.with_suffix(JSON_EXTENSION)
    return path


def get_run_output_dir(base_dir, scenario_name):
    """
    Get the output directory of one scenario inside an experiment folder.

    Args:
        base_dir: Experiment output folder
        scenario_name: Scenario name (slashes and '=' are flattened)

    Returns:
        Path: Path to {base_dir}/{flattened name}/
    """
    safe = scenario_name.replace('/', '__').replace('=', '-').replace(' ', '_')
    return Path(base_dir) / safe
