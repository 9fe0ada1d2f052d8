"""Exception types shared across the solvers."""


class InvalidParameterError(ValueError):
    """A constructor argument is outside its admissible range."""


class DomainError(ValueError):
    """An operation was called outside the region where it is defined."""


class UnsupportedError(ValueError):
    """The problem instance falls in a case the package does not handle (e.g. zero drift)."""


class NumericError(ArithmeticError):
    """A quadrature or root search failed to reach its tolerance.

    ``stage`` names the step that failed (``"B1"``, ``"Astar"``, ...) and
    ``bound`` carries the achieved error estimate when there is one.
    """

    def __init__(self, message, stage=None, bound=None):
        if stage:
            message = f"[{stage}] {message}"
        super().__init__(message)
        self.stage = stage
        self.bound = bound
