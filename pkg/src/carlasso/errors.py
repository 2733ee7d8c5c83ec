"""Exception hierarchy.

Every error raised by the library derives from :class:`CarlassoError` and
carries a short ``kind`` (the class name) plus an optional location, so the
CLI can print a structured one-line message.
"""

from __future__ import annotations


class CarlassoError(Exception):
    """Base class for all library errors."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.message = message
        self.location = location

    @property
    def kind(self) -> str:
        return type(self).__name__

    def __str__(self) -> str:
        if self.location:
            return f"{self.message} (at {self.location})"
        return self.message


# formula


class FormulaError(CarlassoError):
    """Formula text could not be parsed. ``offset`` is a byte offset into the input."""

    def __init__(self, message: str, offset: int, token: str | None = None):
        super().__init__(message, location=f"byte {offset}")
        self.offset = offset
        self.token = token


class MissingTilde(FormulaError):
    pass


class EmptySide(FormulaError):
    pass


class DuplicateName(FormulaError):
    pass


class InvalidIdentifier(FormulaError):
    pass


class UnknownColumn(CarlassoError):
    def __init__(self, name: str, suggestion: str | None = None):
        msg = f"unknown column {name!r}"
        if suggestion:
            msg += f"; did you mean {suggestion!r}?"
        super().__init__(msg, location=f"column {name}")
        self.name = name
        self.suggestion = suggestion


# ingest


class DataIOError(CarlassoError, OSError):
    pass


class EmptyFile(CarlassoError):
    pass


class RaggedRow(CarlassoError):
    def __init__(self, row: int, expected: int, got: int):
        super().__init__(f"row {row} has {got} fields, header has {expected}", location=f"row {row}")
        self.row = row


class DuplicateColumn(CarlassoError):
    pass


class MissingValue(CarlassoError):
    def __init__(self, row: int, column: str):
        super().__init__(f"missing or non-finite value in column {column!r}", location=f"row {row}, column {column}")
        self.row = row
        self.column = column


class NonNumericResponse(CarlassoError):
    pass


class NonIntegerCount(CarlassoError):
    pass


class NonBinaryResponse(CarlassoError):
    pass


class ZeroVariancePredictor(CarlassoError):
    pass


class ZeroRowTotal(CarlassoError):
    pass


# model / samplers / inference


class DimensionMismatch(CarlassoError):
    pass


class NumericalBreakdown(CarlassoError):
    pass


class DomainError(CarlassoError, ValueError):
    pass


class InsufficientData(CarlassoError):
    pass


class InsufficientDraws(CarlassoError):
    pass


class TooFewDraws(CarlassoError):
    pass


class NotSPD(CarlassoError):
    pass


class SingularSystem(CarlassoError):
    pass


class FitDirectoryError(CarlassoError):
    """A fit output directory is missing files or holds unreadable chain data."""
