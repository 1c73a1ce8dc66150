from __future__ import annotations

from contextlib import contextmanager
from typing import Iterator


class KoopidError(Exception):
    """Base class for all identification errors."""

    def __init__(self, *args: object, stage: str | None = None) -> None:
        super().__init__(*args)
        self.stage = stage

    def __str__(self) -> str:
        message = super().__str__()
        if self.stage is None:
            return message
        return f"[{self.stage}] {message}"


class ConfigurationError(KoopidError, ValueError):
    """Raised when options or protocols are invalid."""


class DimensionMismatchError(KoopidError, ValueError):
    """Raised when matrix or vector shapes do not agree."""


class DatasetError(KoopidError):
    """Raised when snapshot data is empty, malformed or non-finite."""


class OutOfBasisError(KoopidError):
    """Raised when a multi-index exceeds the degree of the basis."""


class BasisTooLargeError(KoopidError):
    """Raised when a basis would not fit in a native array index."""


class UnknownSystemError(KoopidError, ValueError):
    """Raised when a built-in system name is not known."""

    def __init__(self, name: str, choices: tuple[str, ...]) -> None:
        super().__init__(
            f"Unknown system {name!r}, choose one of: {', '.join(choices)}"
        )
        self.name = name
        self.choices = choices


class NumericalError(KoopidError):
    """Raised when a linear-algebra kernel fails."""


class SingularMatrixError(NumericalError):
    """Raised when the matrix logarithm is asked for a singular matrix."""


class NegativeRealEigenvalueError(NumericalError):
    """Raised when no real principal matrix logarithm exists."""

    def __init__(
        self,
        message: str,
        eigenvalues: list[complex] | None = None,
        hint: str | None = None,
        stage: str | None = None,
    ) -> None:
        super().__init__(message, stage=stage)
        self.eigenvalues = eigenvalues or []
        self.hint = hint


class UndefinedMetricError(KoopidError):
    """Raised when a metric has no meaningful value."""


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag errors escaping the block with the pipeline stage, unless already tagged."""
    try:
        yield
    except KoopidError as err:
        if err.stage is None:
            err.stage = name
        raise
