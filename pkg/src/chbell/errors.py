"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class ChBellError(Exception):
    """Base class for all library errors."""


class TrialDataError(ChBellError, ValueError):
    """Malformed trial data.

    ``index`` is the trial counter (or the input line number when raised by
    the CSV reader) of the offending record, when known.
    """

    def __init__(self, message: str, index: int | None = None, where: str = "at"):
        self.index = index
        if index is not None:
            message = f"{message} ({where} {index})"
        super().__init__(message)


class EmptySupportError(ChBellError, ValueError):
    """A distribution was requested from data with no relevant trials."""


class InvalidParameterError(ChBellError, ValueError):
    pass


class DomainError(InvalidParameterError):
    """A numeric argument lies outside the region where a formula is valid."""


class DegenerateStrategyError(InvalidParameterError):
    """A deterministic strategy produces no non-00 outcome."""


class IncompatibleMethodError(ChBellError, ValueError):
    """The requested analysis method does not apply to the given walk."""
