"""
Exception hierarchy shared by all packages.

Messages come from config.ERROR_MESSAGES so that the CLI and the library report the
same wording.
"""
from config import ERROR_MESSAGES


class AffineSwarmError(Exception):
    """Base class for every error raised on purpose by this project"""


class ConfigurationError(AffineSwarmError, ValueError):
    """Invalid configuration, schedule gap or dimension mismatch"""


class ScenarioValidationError(ConfigurationError):
    """A scenario failed validation; carries every problem found, not only the first"""

    def __init__(self, name, problems):
        self.name = name
        self.problems = list(problems)
        lines = [ERROR_MESSAGES['invalid_scenario'].format(name=name, count=len(self.problems))]
        lines.extend(f"  - {problem}" for problem in self.problems)
        super().__init__("\n".join(lines))


class StressError(AffineSwarmError):
    """No usable stress matrix for the framework"""


class NotUniversallyRigidError(StressError):
    def __init__(self, reason):
        super().__init__(ERROR_MESSAGES['not_universally_rigid'].format(reason=reason))


class NonGenericConfigurationError(StressError):
    def __init__(self, reason):
        super().__init__(ERROR_MESSAGES['non_generic'].format(reason=reason))


class EstimatorContractError(AffineSwarmError):
    """The control law needed a neighbour estimate the estimator did not supply"""

    def __init__(self, i, j):
        # 1-based in messages, like every user-facing surface
        super().__init__(ERROR_MESSAGES['missing_estimate'].format(i=i + 1, j=j + 1))


class CovarianceError(AffineSwarmError, ValueError):
    """A covariance handed to the Kalman recursion is not PSD"""

    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(ERROR_MESSAGES['covariance_not_psd'].format(value=self.min_eigenvalue))
