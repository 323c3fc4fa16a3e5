"""Exception hierarchy shared by all fvsolve modules."""

from __future__ import annotations


class FVError(Exception):
    """Base class for every error raised by fvsolve."""


class DimensionError(FVError, ValueError):
    pass


class DomainError(FVError, ValueError):
    pass


class SingularMatrixError(FVError, ArithmeticError):
    """Raised when a pivot collapses to working precision.

    ``pivot`` carries the offending pivot magnitude, ``index`` the block or
    row where it occurred (``None`` if not applicable).
    """

    def __init__(self, message: str, pivot: float = 0.0, index: int | None = None):
        super().__init__(message)
        self.pivot = pivot
        self.index = index


class ConvergenceError(FVError, RuntimeError):
    """Iteration did not reach its tolerance; ``history`` keeps the iterates."""

    def __init__(self, message: str, history=None, energy=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.energy = energy


class BracketError(FVError, ValueError):
    pass


class AccuracyError(FVError, RuntimeError):
    pass


class AssemblyError(FVError, ValueError):
    pass


class ResourceError(FVError, MemoryError):
    pass


class ConfigError(FVError, ValueError):
    """Configuration problem; ``line`` or ``key`` locate it when known."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        elif key is not None:
            message = f"{key}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key
