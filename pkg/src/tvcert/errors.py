"""Exception types shared across the toolkit."""


class TVCertError(Exception):
    """Base class for all toolkit errors."""


class ConditioningError(TVCertError):
    """Gram system too ill-conditioned to solve reliably (radii too close
    for the given kernel width)."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class GridTooCoarse(TVCertError):
    """A feasibility scan could not resolve its local maxima; rerun with a
    denser grid."""


class DimensionMismatch(TVCertError):
    """Operands have incompatible shapes."""


class InvalidSegment(TVCertError):
    """An index range does not describe a contiguous arc of a closed curve."""


class InvalidDims(TVCertError):
    """Requested grid dimensions are invalid for the operation."""


class NotConverged(TVCertError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    Carries the last iterate so callers can inspect or resume.
    """

    def __init__(self, message, result=None, gap=None):
        super().__init__(message)
        self.result = result
        self.gap = gap
