"""Exception hierarchy shared by all excitrace modules."""


class ExcitraceError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ExcitraceError, ValueError):
    pass


class ShapeMismatch(ExcitraceError, ValueError):
    pass


class LengthMismatch(ExcitraceError, ValueError):
    pass


class InvalidSize(ExcitraceError, ValueError):
    pass


class InvalidGrid(ExcitraceError, ValueError):
    pass


class ModeOutOfRange(ExcitraceError, ValueError):
    pass


class InvalidBasisString(ExcitraceError, ValueError):
    pass


class TooFewPoints(ExcitraceError, ValueError):
    pass


class NotBound(ExcitraceError, ValueError):
    pass


class TooLarge(ExcitraceError, ValueError):
    pass


class ConfigError(ExcitraceError, ValueError):
    pass


class NumericalError(ExcitraceError, ArithmeticError):
    """Base class for failures that come from the numbers, not the inputs."""


class NotPositiveDefinite(NumericalError):
    """Cholesky hit a non-positive pivot.

    Usually means the variational states became linearly dependent.
    """

    def __init__(self, pivot, message=None):
        self.pivot = int(pivot)
        super().__init__(message or f"matrix is not positive definite (failing pivot index {self.pivot})")


class NonFiniteLoss(NumericalError):
    def __init__(self, message, params=None, step=None):
        self.params = params
        self.step = step
        super().__init__(message)


class IllConditionedOverlap(NumericalError):
    def __init__(self, cond, limit, step=None):
        self.cond = float(cond)
        self.limit = float(limit)
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"overlap condition number {self.cond:.3e} exceeds {self.limit:.1e}{where}; "
                         "variational states are collapsing")
