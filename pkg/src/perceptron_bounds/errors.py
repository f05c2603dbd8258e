"""Exception types shared across the package."""

from __future__ import annotations


class InfeasibleWitnessError(ValueError):
    """A bound witness violates its feasibility constraint (norm or margin)."""


class TracePreconditionError(ValueError):
    """A trace was produced under settings the bound evaluators do not cover."""


class DataParseError(ValueError):
    """A data file could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class GenerationError(ValueError):
    """Dataset generation could not complete (rejection sampling stalled)."""
