"""Exception hierarchy for hardy_lab."""

from __future__ import annotations


class HardyLabError(Exception):
    """Base class for all library errors."""


class DimensionError(HardyLabError, ValueError):
    """Operands live in different truncated ambients."""


class DomainError(HardyLabError, ValueError):
    """A point or zero lies outside the open unit disc."""


class PreconditionError(HardyLabError):
    """A theorem hypothesis failed numerically.

    ``details`` carries the offending residuals (or a Gram matrix) so callers
    can report how far off the input was.
    """

    def __init__(self, msg: str, **details):
        super().__init__(msg)
        self.details = details


class ConvergenceError(HardyLabError):
    """An iteration hit its cap before the residual fell below tolerance."""

    def __init__(self, msg: str, trace):
        super().__init__(msg)
        self.trace = list(trace)


class ConfigError(HardyLabError):
    """Malformed scenario configuration."""

    def __init__(self, msg: str, field: str | None = None):
        super().__init__(msg)
        self.field = field


class DegenerateInputError(PreconditionError):
    """The input is valid but degenerate for the requested construction (e.g. M inside B H^2)."""
