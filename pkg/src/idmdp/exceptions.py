"""Exception types shared across the package."""


class InvalidModelError(ValueError):
    """Raised when model data violates its structural invariants."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericalError(ArithmeticError):
    """Raised when a direct solve leaves a residual above tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GuardExceededError(ValueError):
    """Raised when an enumeration would exceed its size guard.

    ``required`` holds the guard value that would have allowed the call.
    """

    def __init__(self, message, required):
        super().__init__(message)
        self.required = required
