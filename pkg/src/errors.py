"""Exception hierarchy shared by every lab module."""

from typing import Any


class LabError(Exception):
    """Base class for all lab failures."""


class ExpressionSyntaxError(LabError):
    """Raised when a coefficient expression cannot be parsed."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ExpressionEvaluationError(LabError):
    """Raised when an expression is undefined at a sample point."""

    def __init__(self, message: str, point: tuple[float, ...] | None = None):
        where = "" if point is None else f" at x={tuple(round(p, 12) for p in point)}"
        super().__init__(f"{message}{where}")
        self.point = point


class FieldError(LabError):
    """Raised for invalid coefficient fields (PSD, dimension, positivity)."""


class GridError(LabError):
    """Raised for invalid grids and grid functions."""


class SolverError(LabError):
    """Raised when a semigroup or linear solve fails to meet its tolerance."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InsufficientDataError(LabError):
    """Raised when a classifier window holds too few usable samples."""


class EnvelopeError(LabError):
    """Raised when a kernel envelope cannot be fitted."""


class DivergentMomentError(LabError):
    """Raised when a profile moment integral diverges."""


class ConfigError(LabError):
    """Raised for invalid experiment configuration."""
