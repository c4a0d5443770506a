"""Exception types shared across the toolkit."""


class MklAlignError(Exception):
    """Base class for all toolkit errors."""


class DataError(MklAlignError):
    """Unreadable, malformed, or semantically invalid input data."""


class DimensionError(DataError):
    """Operands whose shapes cannot be combined."""


class DegenerateKernelError(MklAlignError):
    """A kernel whose centered matrix vanishes (no usable signal direction)."""


class NoSignalError(MklAlignError):
    """Every base kernel scored zero against the target; no direction to scale."""


class SingularSystemError(MklAlignError):
    """The kernel-products matrix is numerically singular for a closed-form solve."""


class NonConvergedError(MklAlignError):
    """An iterative solver hit its iteration budget above tolerance.

    Carries the best iterate seen and the residual at that iterate so the
    caller can inspect or resume.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
