"""Exception hierarchy.

``ValidationError`` maps to CLI exit code 1, ``FormatError`` to exit code 2.
"""

from __future__ import annotations


class FocusTimeError(Exception):
    pass


class ValidationError(FocusTimeError, ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class InvariantError(FocusTimeError, AssertionError):
    pass


class ConfigError(ValidationError):
    pass


class LookupLabelError(FocusTimeError, KeyError):
    def __init__(self, label: str):
        super().__init__(label)
        self.label = label

    def __str__(self):
        return f"label not in vocabulary: {self.label!r}"


class TrainingError(FocusTimeError, RuntimeError):
    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class FormatError(FocusTimeError, IOError):
    pass


class DegenerateWindowError(ValidationError):
    pass


class GridPointError(FocusTimeError):
    def __init__(self, point, cause: Exception):
        super().__init__(f"grid point {point}: {cause}")
        self.point = point
        self.cause = cause
