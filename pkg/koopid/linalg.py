"""Dense linear-algebra kernels used by the identification pipeline."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Final

import numpy as np
import scipy.linalg

from .const import ALIASING_FRACTION, BRANCH_CUT_TOLERANCE, LOGM_IMAG_TOLERANCE
from .error import (
    DimensionMismatchError,
    NegativeRealEigenvalueError,
    NumericalError,
    SingularMatrixError,
)

_LOGGER: Final = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalue diagnostics of a matrix handed to the principal logarithm."""

    eigenvalues: list[complex] = field(repr=False)
    # Smallest real eigenvalue, None when every eigenvalue is complex
    min_real_eigenvalue: float | None
    # Largest |Im log(lambda)| over the spectrum, at most pi
    max_abs_imag_log: float
    aliasing_suspected: bool = False
    logm_residual: float | None = None

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "min_real_eigenvalue": self.min_real_eigenvalue,
            "max_abs_imag_log": self.max_abs_imag_log,
            "aliasing_suspected": self.aliasing_suspected,
            "logm_residual": self.logm_residual,
        }


def default_rcond(a: np.ndarray) -> float:
    return float(np.finfo(float).eps * max(a.shape))


def _as_finite_matrix(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    matrix = np.asarray(a, dtype=float)
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-D {name}, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NumericalError(f"The {name} contains non-finite entries")
    return matrix


def _as_square(a: np.ndarray) -> np.ndarray:
    matrix = _as_finite_matrix(a)
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got shape {matrix.shape}")
    return matrix


def pseudoinverse(a: np.ndarray, rcond: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse; singular values <= rcond * sigma_max are dropped."""
    matrix = _as_finite_matrix(a)
    if rcond is None:
        rcond = default_rcond(matrix)

    try:
        return scipy.linalg.pinv(matrix, atol=0.0, rtol=rcond)
    except np.linalg.LinAlgError as err:
        raise NumericalError(
            f"SVD did not converge for a {matrix.shape[0]}x{matrix.shape[1]} matrix "
            f"(Frobenius norm {np.linalg.norm(matrix):.3e}): {err}"
        ) from err


def lstsq(
    a: np.ndarray,
    b: np.ndarray,
    rcond: float | None = None,
    *,
    return_rank: bool = False,
) -> np.ndarray | tuple[np.ndarray, int]:
    """Minimum-norm least-squares solution of a @ x ~ b."""
    matrix = _as_finite_matrix(a)
    rhs = np.asarray(b, dtype=float)
    if rhs.shape[0] != matrix.shape[0]:
        raise DimensionMismatchError(
            f"Left-hand side has {matrix.shape[0]} rows, right-hand side has {rhs.shape[0]}"
        )
    if not np.all(np.isfinite(rhs)):
        raise NumericalError("The right-hand side contains non-finite entries")
    if rcond is None:
        rcond = default_rcond(matrix)

    try:
        solution, _, rank, _ = scipy.linalg.lstsq(
            matrix, rhs, cond=rcond, lapack_driver="gelsd"
        )
    except np.linalg.LinAlgError as err:
        raise NumericalError(
            f"Least squares did not converge for a {matrix.shape[0]}x{matrix.shape[1]} "
            f"matrix: {err}"
        ) from err

    if return_rank:
        return solution, int(rank)
    return solution


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with Pade approximation."""
    return scipy.linalg.expm(_as_square(a))


def spectrum_report(eigenvalues: np.ndarray) -> SpectrumReport:
    real = [float(z.real) for z in eigenvalues if abs(z.imag) <= BRANCH_CUT_TOLERANCE]
    angles = np.abs(np.angle(eigenvalues)) if len(eigenvalues) else np.zeros(0)
    max_abs_imag_log = float(angles.max()) if angles.size else 0.0
    return SpectrumReport(
        eigenvalues=[complex(z) for z in eigenvalues],
        min_real_eigenvalue=min(real) if real else None,
        max_abs_imag_log=max_abs_imag_log,
        aliasing_suspected=max_abs_imag_log > ALIASING_FRACTION * math.pi,
    )


def logm_principal(a: np.ndarray) -> tuple[np.ndarray, SpectrumReport]:
    """Real principal matrix logarithm with spectral diagnostics.

    The logarithm itself is the Schur-based inverse scaling and squaring
    algorithm of scipy. Eigenvalues on (or within BRANCH_CUT_TOLERANCE of) the
    closed negative real axis have no real principal logarithm and raise
    NegativeRealEigenvalueError instead of returning a complex result.
    """
    matrix = _as_square(a)
    size = matrix.shape[0]

    try:
        eigenvalues = scipy.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"Eigenvalue computation failed: {err}") from err

    scale = max(1.0, float(np.linalg.norm(matrix, ord=2)))
    if np.any(np.abs(eigenvalues) <= np.finfo(float).eps * size * scale):
        raise SingularMatrixError(
            f"Matrix is singular, smallest |eigenvalue| is {np.abs(eigenvalues).min():.3e}"
        )

    on_cut = (eigenvalues.real < 0) & (np.abs(eigenvalues.imag) <= BRANCH_CUT_TOLERANCE)
    if np.any(on_cut):
        offending = [complex(z) for z in eigenvalues[on_cut]]
        raise NegativeRealEigenvalueError(
            f"{len(offending)} eigenvalue(s) on the negative real axis, "
            f"e.g. {offending[0].real:.4g}; no real principal logarithm exists",
            eigenvalues=offending,
        )

    report = spectrum_report(eigenvalues)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        logarithm = scipy.linalg.logm(matrix)
    for warning in caught:
        _LOGGER.debug("scipy logm: %s", warning.message)

    logarithm = np.asarray(logarithm)
    if np.iscomplexobj(logarithm):
        imaginary = float(np.abs(logarithm.imag).max(initial=0.0))
        if imaginary > LOGM_IMAG_TOLERANCE * max(1.0, float(np.abs(logarithm.real).max(initial=0.0))):
            raise NumericalError(
                f"Matrix logarithm has an imaginary part of {imaginary:.3e}"
            )
        logarithm = logarithm.real
    if not np.all(np.isfinite(logarithm)):
        raise NumericalError("Matrix logarithm produced non-finite entries")

    residual = float(
        np.linalg.norm(scipy.linalg.expm(logarithm) - matrix) / np.linalg.norm(matrix)
    )
    report = replace(report, logm_residual=residual)

    if report.aliasing_suspected:
        _LOGGER.warning(
            "Largest |Im log(lambda)| is %.3f (> %.1f pi); "
            "consider a smaller sampling period",
            report.max_abs_imag_log,
            ALIASING_FRACTION,
        )

    return logarithm, report


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacked vectorization."""
    return np.asarray(a, dtype=float).reshape(-1, order="F")
