class IvemError(Exception):
    """Base class for all errors raised by the package."""


class AssumptionViolation(IvemError):
    """The interface cuts an element in a way the method does not support."""


class GeometryError(IvemError):
    """Cut geometry could not be constructed."""


class NumericalFailure(IvemError):
    """A linear solve failed to converge or hit a non-definite pivot."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConfigError(IvemError, ValueError):
    """Malformed study configuration."""
