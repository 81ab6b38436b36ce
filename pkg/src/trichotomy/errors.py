"""Exception hierarchy."""

from __future__ import annotations

from typing import Any


class TrichotomyError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(TrichotomyError, ValueError):
    pass


class EvaluationError(TrichotomyError):
    """An operator or projection produced a non-finite value or raised.

    ``sample`` carries the offending grid sample (times and vector id) when
    the failure happened inside a sweep.
    """

    def __init__(self, message: str, sample: dict[str, Any] | None = None):
        super().__init__(message if sample is None else f"{message} at {sample}")
        self.sample = sample


class SemigroupLawError(TrichotomyError):
    def __init__(self, message: str, witness: dict[str, Any]):
        super().__init__(f"{message}: {witness}")
        self.witness = witness


class CommutationError(TrichotomyError):
    def __init__(self, message: str, report: Any):
        super().__init__(message)
        self.report = report


class IncompatibleFamilyError(TrichotomyError):
    """Raised when a verifier or transform is handed families that fail
    their compatibility check. The failing report is attached."""

    def __init__(self, message: str, report: Any):
        super().__init__(message)
        self.report = report


class ScenarioError(TrichotomyError):
    """Malformed scenario; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
