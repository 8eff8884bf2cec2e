"""Exception hierarchy shared by all metaprint modules."""

from __future__ import annotations


class MetaprintError(Exception):
    """Base class for all errors raised by this package."""


class RecordValidationError(MetaprintError):
    """A metadata record violates a per-field invariant."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InvalidCombinationError(MetaprintError):
    """A feature combination is empty or contains duplicates."""


class MalformedInputError(MetaprintError):
    """Too many malformed lines in an input stream."""

    def __init__(self, message: str, line_numbers: tuple[int, ...]):
        super().__init__(message)
        self.line_numbers = line_numbers


class InsufficientRecordsError(MetaprintError):
    """A user has fewer records than an operation requires."""

    def __init__(self, user: str, have: int, need: int):
        super().__init__(f"user {user!r} has {have} records, needs {need}")
        self.user = user


class StratificationError(MetaprintError):
    """A user cannot be split into non-empty train and test sides."""


class ShapeError(MetaprintError):
    """Feature vectors or matrices have inconsistent shape or combination."""


class UnknownClassError(MetaprintError):
    """A label is not part of the model's identity set."""


class NumericError(MetaprintError):
    """Non-finite values encountered in a numeric computation."""


class ScheduleError(MetaprintError):
    """An obfuscation schedule references columns outside the combination."""


class CapacityError(MetaprintError):
    """The dataset cannot support the requested experiment size."""


class PlanError(MetaprintError):
    """A partition plan is inconsistent with the provided training data."""
