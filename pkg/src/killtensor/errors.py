"""Exception types shared across the package."""


class KillTensorError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(KillTensorError, ValueError):
    pass


class DegreeMismatch(KillTensorError, ValueError):
    pass


class NotTraceFree(KillTensorError, ValueError):
    pass


class UnsupportedOperation(KillTensorError, TypeError):
    """Raised for operations whose result leaves the band-limited class."""


class InvalidFactor(KillTensorError, ValueError):
    pass


class BandMismatch(KillTensorError, ValueError):
    pass


class IndexRangeError(KillTensorError, ValueError):
    pass


class IntegratorError(KillTensorError, RuntimeError):
    """Fixed-point iteration of an implicit step did not converge."""


class BandWarning(UserWarning):
    """Band too small to hold every predicted solution."""


class ConditioningWarning(UserWarning):
    """Singular values sit too close to the rank threshold."""
