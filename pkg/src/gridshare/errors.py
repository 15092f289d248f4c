"""Exception hierarchy shared by all gridshare modules."""

from __future__ import annotations


class GridshareError(Exception):
    """Base class for every error raised by the package."""


class ParseError(GridshareError):
    pass


class ValidationError(GridshareError):
    pass


class DimensionMismatch(GridshareError):
    pass


class NotConvex(GridshareError):
    pass


class TooLarge(GridshareError):
    pass


class DegenerateRange(GridshareError):
    """Raised when a demand range collapses to a point.

    ``value`` carries the disutility at that point so callers can fix the
    epigraph variable instead of building segments.
    """

    def __init__(self, message: str, value: float, point: float):
        super().__init__(message)
        self.value = value
        self.point = point


class MarketInfeasible(GridshareError):
    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NonConvergence(GridshareError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class AuditFailure(GridshareError):
    pass


class BigMSaturated(GridshareError):
    pass


class DualInfeasible(GridshareError):
    pass


class MasterInfeasible(GridshareError):
    pass


class SolverFailure(GridshareError):
    """A kernel returned a status the caller cannot interpret (e.g. IterLimit)."""
