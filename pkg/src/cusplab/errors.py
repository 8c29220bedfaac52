"""Shared exception types."""


class ParameterError(ValueError):
    """Invalid argument, geometry, or configuration value."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its target accuracy."""


class QuadratureError(NumericalError):
    """Adaptive quadrature exhausted its cell budget.

    Carries the worst offending cell so failures are diagnosable instead of
    silently accepted.
    """

    def __init__(self, message, worst_cell=None, worst_error=None, total=None):
        super().__init__(message)
        self.worst_cell = worst_cell
        self.worst_error = worst_error
        self.total = total


class IntegrationError(NumericalError):
    """Adaptive ODE integration failed (step underflow or budget exhausted)."""
