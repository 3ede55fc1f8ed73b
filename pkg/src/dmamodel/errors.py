"""Exception and warning types raised across the package."""


class DMAError(Exception):
    """Base class for every error raised by dmamodel."""


class InvalidInputError(DMAError, ValueError):
    """Malformed or physically meaningless input (bad dimensions, positions, config)."""


class SingularConfigurationError(DMAError, ArithmeticError):
    """A closed form or linear system is singular (e.g. cavity resonance)."""


class ModelViolationError(DMAError):
    """The inputs leave the domain where a closed-form model is valid."""


class NotPSDError(DMAError, ArithmeticError):
    """A covariance matrix has eigenvalues that are too negative to clip."""


class ToleranceError(DMAError, ArithmeticError):
    """A numerical quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DMAWarning(UserWarning):
    """Base class for non-fatal diagnostics."""


class SingleModeWarning(DMAWarning):
    pass


class ConditioningWarning(DMAWarning):
    pass


class ReflectionWarning(DMAWarning):
    pass


class GeometryWarning(DMAWarning):
    pass
