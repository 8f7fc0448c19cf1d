"""Exception types shared across the package."""


class StableLabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(StableLabError):
    """A parameter is outside its admissible range or inconsistent."""


class SimulationError(StableLabError):
    """The scheme hit a degenerate state (e.g. a singular coefficient matrix)."""


class EstimationError(StableLabError):
    """An estimator could not produce a trustworthy value (e.g. censoring)."""


class InsufficientResolution(EstimationError):
    """Too few usable data points survive the noise filter for a fit."""


class QuadratureError(StableLabError):
    """Adaptive quadrature failed to converge to the requested tolerance.

    Carries the best available estimate and its error bound so callers can
    decide whether the partial answer is still useful.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound
