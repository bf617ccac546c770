"""Exception hierarchy.

Numerical failures derive from :class:`NumericalError` so that the command
line front-end can map them onto a single exit code.
"""

from __future__ import annotations

from typing import Any


class FPDVIError(Exception):
    """Base class for every error raised by the package."""


class NumericalError(FPDVIError):
    """A computation failed to reach its accuracy contract."""


class InvalidOrder(FPDVIError, ValueError):
    pass


class DimensionMismatch(FPDVIError, ValueError):
    pass


class GridMismatch(FPDVIError, ValueError):
    pass


class NonConvergent(NumericalError):
    def __init__(self, message: str, estimate: Any = None, error_bound: float = float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class ContourFailure(NumericalError):
    pass


class SectorViolation(NumericalError):
    pass


class SingularResolvent(NumericalError):
    pass


class InfeasibleSet(NumericalError):
    pass


class UnsupportedVariant(FPDVIError, ValueError):
    pass


class UnsupportedCombination(FPDVIError, ValueError):
    pass


class MaxIterExceeded(NumericalError):
    """Raised by the VI solver; carries the best iterate found."""

    def __init__(self, message: str, u: Any = None, residual: float = float("inf"), iterations: int = 0):
        super().__init__(message)
        self.u = u
        self.residual = residual
        self.iterations = iterations


class NonMonotoneDetected(NumericalError):
    pass


class MaxOuterExceeded(NumericalError):
    """Raised when Picard iteration does not settle; carries the best iterate."""

    def __init__(self, message: str, trajectory: Any = None, report: Any = None):
        super().__init__(message)
        self.trajectory = trajectory
        self.report = report


class AnchorNotInK(FPDVIError, ValueError):
    pass


class NoFeasibleL(NumericalError):
    pass


class DeltaBelowResolution(FPDVIError, ValueError):
    pass


class ParseError(FPDVIError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


class ValidationError(FPDVIError, ValueError):
    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
