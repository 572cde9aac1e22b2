"""Exception types shared across the package."""


class FarmkitError(Exception):
    """Base class for farmkit-specific errors."""


class DimensionError(FarmkitError, ValueError):
    """Input has the wrong shape, or two inputs have incompatible shapes."""


class ConvergenceError(FarmkitError, RuntimeError):
    """An iterative solver failed to converge.

    Carries the last residual so callers can decide whether the iterate is
    still usable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateGapError(FarmkitError, ValueError):
    """An eigen-gap required by a perturbation bound is zero or negative."""


class PreconditionError(FarmkitError, ValueError):
    """A mathematical precondition of an operation is violated by the input."""


class RankDeficiencyError(FarmkitError, ValueError):
    """A matrix does not have the rank required by the operation."""
