"""Exception types shared across the package."""


class GlssError(Exception):
    """Base class for all library errors."""


class InvalidAlphabetError(GlssError):
    """Alphabet or edge set violates a structural requirement."""


class InvalidTransitionError(GlssError):
    """Transition matrix or probability vector is not usable."""


class DimensionError(GlssError):
    """Matrix dimensions are inconsistent with the declared sizes."""


class InstabilityError(GlssError):
    """Mean-square stationarity condition fails (weighted spectral radius >= 1)."""


class WindowError(GlssError):
    """Sample window is too short for the requested statistic."""


class SingularRegressionError(GlssError):
    """Regressor Gram matrix is numerically singular and no ridge was supplied."""


class ConvergenceError(GlssError):
    """Fixed-point iteration failed to converge within the iteration cap."""


class HypothesisViolationError(GlssError):
    """Inputs do not satisfy the preconditions of the requested operation."""


class ModelFormatError(GlssError):
    """Model file is malformed; `field` holds the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
