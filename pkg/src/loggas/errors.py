"""Exception types shared across the package."""


class LoggasError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LoggasError):
    """Invalid or out-of-budget parameters (bad cutoff, empty sweep, ...)."""


class DomainEvaluationError(LoggasError):
    """Evaluation requested at a point where the quantity is undefined."""


class EstimationError(LoggasError):
    """A Monte Carlo estimate could not be produced honestly."""


class IntegrationError(LoggasError):
    """Time stepping failed (non-finite state, CFL retries exhausted)."""


class ConvergenceError(LoggasError):
    """Fixed-point iteration exceeded its iteration budget."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


class TuningError(LoggasError):
    """MCMC step-size tuning ended outside the acceptable window."""


class CrossValidationError(LoggasError):
    """Two independent estimators of the same quantity disagree."""
