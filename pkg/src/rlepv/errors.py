"""Exception hierarchy.

Input problems (bad files, coordinates, configuration) derive from
:class:`InputError`; problems discovered while analysing valid data derive
from :class:`AnalysisError`. The CLI maps the two families to exit codes 2
and 1 respectively.
"""

from __future__ import annotations


class EPVError(Exception):
    """Base class for every error raised by this package."""


class InputError(EPVError):
    pass


class AnalysisError(EPVError):
    pass


class ConfigError(InputError):
    pass


class InvalidCoordinate(InputError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OutOfModelArea(InputError):
    """Point lies inside the opposition in-goal, which no zone system covers."""


class ParseError(InputError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnknownAction(ParseError):
    pass


class MissingDirection(InputError):
    pass


class MissingGeometry(InputError):
    pass


class SegmentationError(AnalysisError):
    pass


class ContractViolation(AnalysisError):
    pass


class InsufficientData(AnalysisError):
    pass


class ZeroReturnMatch(AnalysisError):
    pass


class InsufficientTeams(AnalysisError):
    pass
