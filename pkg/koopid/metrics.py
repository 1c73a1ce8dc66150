"""Coefficient error and network reconstruction scores."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Final, Sequence

import numpy as np
import pandas as pd

from .error import ConfigurationError, DimensionMismatchError, UndefinedMetricError
from .identify import PolynomialVectorField

_LOGGER: Final = logging.getLogger(__name__)

ROC_POINTS = 50


@dataclass(frozen=True, eq=False)
class CoefficientError:
    rmse: float
    nrmse: float
    # estimated - exact, n x N_F
    per_coefficient: np.ndarray = field(repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {"rmse": self.rmse, "nrmse": self.nrmse}


@dataclass(frozen=True, eq=False)
class LinkScore:
    """Rates over off-diagonal entries; None when the denominator is zero."""

    tpr: float | None
    fpr: float | None
    predicted_adjacency: np.ndarray = field(repr=False)
    true_positives: int = 0
    false_positives: int = 0
    positives: int = 0
    negatives: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "tpr": self.tpr,
            "fpr": self.fpr,
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "positives": self.positives,
            "negatives": self.negatives,
        }


def _aligned_tables(
    estimated: PolynomialVectorField, exact: PolynomialVectorField
) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient tables on the larger of the two bases.

    A lower-degree basis is a prefix of a higher-degree one, so the smaller
    table is padded with zero columns.
    """
    if estimated.dim != exact.dim or estimated.input_dim != exact.input_dim:
        raise DimensionMismatchError(
            f"Cannot compare a field with {estimated.dim} states and "
            f"{estimated.input_dim} inputs to one with {exact.dim} states and "
            f"{exact.input_dim} inputs"
        )
    a, b = estimated.coefficients, exact.coefficients
    width = max(a.shape[1], b.shape[1])
    return (
        np.pad(a, ((0, 0), (0, width - a.shape[1]))),
        np.pad(b, ((0, 0), (0, width - b.shape[1]))),
    )


def coefficient_error(
    estimated: PolynomialVectorField, exact: PolynomialVectorField
) -> CoefficientError:
    """RMSE over all n * N_F coefficients, and RMSE over the mean |nonzero exact|."""
    estimate, truth = _aligned_tables(estimated, exact)
    difference = estimate - truth
    rmse = float(np.sqrt(np.mean(difference**2)))

    nonzero = np.abs(truth[truth != 0.0])
    if nonzero.size == 0:
        raise UndefinedMetricError("NRMSE is undefined for an identically zero exact field")

    return CoefficientError(
        rmse=rmse,
        nrmse=rmse / float(nonzero.mean()),
        per_coefficient=difference,
    )


def reconstruct_links(estimated: PolynomialVectorField, threshold: float) -> np.ndarray:
    """Adjacency (j, l): some |w^j_k| > threshold with x_l in monomial k.

    Input variables never form links. The pure linear term x_j of equation j
    does not create a self-link.
    """
    if not threshold > 0:
        raise ConfigurationError(f"Threshold must be positive, got {threshold}")

    dim = estimated.dim
    strong = np.abs(estimated.coefficients) > threshold
    exponents = estimated.basis.exponents
    for j in range(dim):
        linear = [0] * estimated.variables
        linear[j] = 1
        strong[j, estimated.basis.reverse_map[tuple(linear)] - 1] = False

    contains = exponents[:, :dim] > 0
    return (strong.astype(np.int64) @ contains.astype(np.int64)) > 0


def link_score(predicted: np.ndarray, truth: np.ndarray) -> LinkScore:
    """True and false positive rates, excluding the diagonal."""
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predicted.shape != truth.shape or predicted.ndim != 2 or truth.shape[0] != truth.shape[1]:
        raise DimensionMismatchError(
            f"Adjacencies have shapes {predicted.shape} and {truth.shape}"
        )

    off_diagonal = ~np.eye(truth.shape[0], dtype=bool)
    true_positives = int(np.sum(predicted & truth & off_diagonal))
    false_positives = int(np.sum(predicted & ~truth & off_diagonal))
    positives = int(np.sum(truth & off_diagonal))
    negatives = int(np.sum(~truth & off_diagonal))

    if positives == 0 or negatives == 0:
        _LOGGER.debug(
            "Link score with %d positives and %d negatives, some rates undefined",
            positives,
            negatives,
        )

    return LinkScore(
        tpr=true_positives / positives if positives else None,
        fpr=false_positives / negatives if negatives else None,
        predicted_adjacency=predicted,
        true_positives=true_positives,
        false_positives=false_positives,
        positives=positives,
        negatives=negatives,
    )


def roc_sweep(
    estimated: PolynomialVectorField,
    truth: np.ndarray,
    thresholds: Sequence[float] | None = None,
) -> pd.DataFrame:
    """(threshold, tpr, fpr) rows, thresholds ascending.

    Without explicit thresholds, ROC_POINTS values are spread geometrically
    between the smallest and largest nonzero |w|.
    """
    if thresholds is None:
        magnitudes = np.abs(estimated.coefficients)
        magnitudes = magnitudes[magnitudes > 0]
        if magnitudes.size == 0:
            raise UndefinedMetricError("Cannot sweep thresholds over an all-zero field")
        thresholds = np.geomspace(magnitudes.min(), magnitudes.max(), ROC_POINTS)

    rows = []
    for threshold in sorted(float(t) for t in thresholds):
        score = link_score(reconstruct_links(estimated, threshold), truth)
        rows.append({"threshold": threshold, "tpr": score.tpr, "fpr": score.fpr})
    return pd.DataFrame(rows, columns=["threshold", "tpr", "fpr"])


def coefficient_scatter(
    estimated: PolynomialVectorField, exact: PolynomialVectorField
) -> pd.DataFrame:
    """One row per coefficient w^j_k, for estimated-against-exact plots."""
    estimate, truth = _aligned_tables(estimated, exact)
    basis_field = estimated if estimated.degree >= exact.degree else exact
    labels = basis_field.monomial_labels()

    dim, width = truth.shape
    return pd.DataFrame(
        {
            "index": np.arange(1, dim * width + 1),
            "equation": np.repeat(np.arange(1, dim + 1), width),
            "monomial": labels * dim,
            "w_exact": truth.ravel(),
            "w_estimated": estimate.ravel(),
        }
    )
