"""Exception types shared across the library."""


class SynfireError(Exception):
    """Base class for library errors."""


class DomainError(SynfireError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(SynfireError):
    """A quadrature or iteration did not reach the requested tolerance.

    Carries the best estimate achieved so far in ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DegenerateInputError(SynfireError, ValueError):
    """Zero-noise input where a stochastic map is undefined."""


class InsufficientDataError(SynfireError, ValueError):
    """Recording too short for the requested estimator."""


class ConfigError(SynfireError, ValueError):
    """Invalid or unknown experiment configuration."""
