"""Exception types raised across the package."""


class OutlabError(Exception):
    """Base class for package errors."""


class InvalidDimensionError(OutlabError, ValueError):
    pass


class InvalidRankError(OutlabError, ValueError):
    pass


class InvalidParameterError(OutlabError, ValueError):
    pass


class SingularMatrixError(OutlabError, ArithmeticError):
    pass


class ResolventSingularError(SingularMatrixError):
    """(X/sqrt(n) - z) is singular to working precision at ``z``."""

    def __init__(self, z, message=None):
        self.z = z
        super().__init__(message or f"resolvent is singular at z={z!r}")


class OracleSingularError(SingularMatrixError):
    pass


class ConvergenceError(OutlabError, RuntimeError):
    """Iteration budget exhausted; ``partial`` holds what did converge."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class PoleError(OutlabError, ZeroDivisionError):
    pass


class ContourError(OutlabError, RuntimeError):
    """The function came too close to zero on a contour."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class UnresolvableContourError(ContourError):
    pass


class OutsideRegionError(OutlabError, ValueError):
    pass


class DivergentRegionError(InvalidParameterError):
    """The requested region reaches the disk where the series diverges."""
