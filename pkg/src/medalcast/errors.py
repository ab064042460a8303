"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class MedalcastError(Exception):
    """Base class for all toolkit errors."""


class DomainError(MedalcastError, ValueError):
    """An argument or data set violates a documented precondition."""


class StateError(MedalcastError, RuntimeError):
    """An operation was called on an object in the wrong state."""


class NonConvergenceError(MedalcastError, RuntimeError):
    """An iterative routine hit its budget before meeting its tolerance.

    Carries whatever diagnostics the routine had at the point of failure
    (last iterate, objective trace, residuals) so callers can inspect or
    restart.
    """

    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class SeparationError(MedalcastError, RuntimeError):
    """Perfect separation detected in a logistic fit; the MLE diverges."""


class SchemaError(MedalcastError, ValueError):
    """An input file does not conform to its declared schema."""

    def __init__(self, message: str, *, path=None, row=None, column=None):
        loc = []
        if path is not None:
            loc.append(str(path))
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.path = path
        self.row = row
        self.column = column
