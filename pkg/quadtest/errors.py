"""
Exception hierarchy for Quadtest.

Every error raised on purpose by the package derives from QuadTestError and
carries the process exit code the CLI should use when it surfaces.
"""

from typing import Any, Dict, Optional


class QuadTestError(Exception):
    """
    Base class for all Quadtest errors.

    Args:
        message (str): Human readable description
        details (Optional[Dict[str, Any]]): Structured context for reports and logs
    """
    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class ConfigError(QuadTestError):
    """Invalid configuration: unknown keys, bad types, missing class bounds."""
    exit_code = 2


class DomainError(ConfigError, ValueError):
    """A precondition on the problem parameters is violated."""


class PilotCapError(ConfigError):
    """The pilot truncation admits more indices than the cap allows."""


class DataError(QuadTestError):
    """
    Malformed input data.

    Args:
        message (str): Description of the problem
        line (Optional[int]): 1-based line number in the source file
        column (Optional[str]): Offending column name
    """
    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        details: Dict[str, Any] = {}
        if line is not None:
            details["line"] = line
            message = f"line {line}: {message}"
        if column is not None:
            details["column"] = column
        super().__init__(message, details)
        self.line = line
        self.column = column


class NumericalError(QuadTestError):
    """A numerical procedure could not deliver a result."""
    exit_code = 4


class InfeasibleSeparationError(NumericalError):
    """
    The requested separation lies outside the attainable range.

    Args:
        message (str): Description
        endpoint (float): The attainable range endpoint that was crossed
    """

    def __init__(self, message: str, endpoint: float):
        super().__init__(message, {"endpoint": endpoint})
        self.endpoint = endpoint


class TuningError(NumericalError):
    """The tuning equation has no sign change on the scanned range."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None,
                 minimum_n: Optional[int] = None):
        details = dict(details or {})
        if minimum_n is not None:
            details["minimum_n"] = minimum_n
            message = f"{message} (needs n >= {minimum_n})"
        super().__init__(message, details)
        self.minimum_n = minimum_n


class ActiveSetTooLargeError(NumericalError):
    """The search box for an active set outgrew the configured cap."""


class QuadratureError(NumericalError):
    """
    Adaptive cubature did not reach the requested tolerance.

    Args:
        message (str): Description
        error_estimate (float): Achieved absolute error estimate
    """

    def __init__(self, message: str, error_estimate: float):
        super().__init__(message, {"error_estimate": error_estimate})
        self.error_estimate = error_estimate


class MonteCarloError(NumericalError):
    """A replication failed inside a Monte Carlo campaign."""

    def __init__(self, message: str, replication: int, hypothesis: str):
        super().__init__(f"replication {replication} ({hypothesis}): {message}",
                         {"replication": replication, "hypothesis": hypothesis})
        self.replication = replication
        self.hypothesis = hypothesis
