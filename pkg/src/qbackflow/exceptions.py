"""Exception hierarchy shared across the package."""


class BackflowError(Exception):
    """Base class for all errors raised by qbackflow."""


class ParameterError(BackflowError, ValueError):
    """A parameter lies outside its admissible domain."""


class ShapeError(BackflowError, ValueError):
    """Sample arrays do not line up with their grid."""


class SolverError(BackflowError, RuntimeError):
    """The eigensolver failed or returned an inaccurate eigenpair."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class ExtrapolationError(BackflowError, RuntimeError):
    """A convergence sequence cannot be extrapolated.

    The raw values are kept on the exception so the caller can inspect them.
    """

    def __init__(self, message, raw_values=()):
        super().__init__(f"{message}; raw values: {list(raw_values)}")
        self.raw_values = list(raw_values)


class TruncationError(BackflowError, RuntimeError):
    """A state carries more probability outside its grid than allowed."""

    def __init__(self, message, lost_mass):
        super().__init__(f"{message} (estimated lost mass {lost_mass:.3e})")
        self.lost_mass = lost_mass
