"""
Exception hierarchy for the lab.

Every library error carries a human-readable ``detail`` and the CLI exit code it
maps to: bad input from the caller exits 2, failures inside a computation exit 3.
Argument-style errors also subclass ValueError so callers can catch them
without importing this module.
"""
from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class LabError(Exception):
    exit_code = EXIT_NUMERICAL

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# ===== ARGUMENT ERRORS =====
class LabelError(LabError, KeyError):
    """A variable label that the distribution does not define."""

    exit_code = EXIT_USAGE

    def __str__(self) -> str:
        return self.detail


class ArgumentError(LabError, ValueError):
    exit_code = EXIT_USAGE


class DomainError(LabError, ValueError):
    exit_code = EXIT_USAGE


class UnsupportedError(LabError, ValueError):
    exit_code = EXIT_USAGE


# ===== STATE ERRORS =====
class ConditioningError(LabError):
    pass


class PreconditionError(LabError):
    def __init__(self, detail: str, condition: Optional[str] = None):
        super().__init__(detail)
        self.condition = condition


class UpdateError(LabError):
    pass


class ResourceError(LabError):
    pass


class NumericalError(LabError):
    pass


# ===== CLI ERRORS =====
class UsageError(LabError, ValueError):
    exit_code = EXIT_USAGE
