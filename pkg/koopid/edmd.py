"""Lifting of snapshot data and estimation of the projected Koopman matrix."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Final

import numpy as np

from .basis import MonomialBasis, lift
from .error import (
    DatasetError,
    DimensionMismatchError,
    NegativeRealEigenvalueError,
    SingularMatrixError,
    stage,
)
from .linalg import SpectrumReport, default_rcond, logm_principal, lstsq

_LOGGER: Final = logging.getLogger(__name__)

NEGATIVE_EIGENVALUE_HINT: Final = (
    "add data (more trajectories or snapshots) or reduce the sampling period"
)


@dataclass(frozen=True, eq=False)
class SnapshotDataset:
    """Snapshot pairs (x_k, y_k) sharing one sampling period.

    Pairs may come from different trajectories. When `inputs` is set, u_k is
    the input held constant over the interval starting at x_k.
    """

    x: np.ndarray
    y: np.ndarray
    sampling_period: float
    inputs: np.ndarray | None = None
    trajectory_ids: np.ndarray | None = field(default=None, repr=False)
    times: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2:
            raise DimensionMismatchError(f"Expected K x n states, got shape {x.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

        if x.shape != y.shape:
            raise DimensionMismatchError(
                f"x has shape {x.shape} but y has shape {y.shape}"
            )
        if not self.sampling_period > 0:
            raise DatasetError(
                f"Sampling period must be positive, got {self.sampling_period}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DatasetError("Snapshot data contains non-finite values")

        if self.inputs is not None:
            inputs = np.asarray(self.inputs, dtype=float)
            if inputs.ndim == 1:
                inputs = inputs.reshape(-1, 1)
            if inputs.shape[0] != x.shape[0]:
                raise DimensionMismatchError(
                    f"{inputs.shape[0]} inputs given for {x.shape[0]} snapshot pairs"
                )
            if not np.all(np.isfinite(inputs)):
                raise DatasetError("Input data contains non-finite values")
            object.__setattr__(self, "inputs", inputs)

        for name in ("trajectory_ids", "times"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value)
                if value.shape != (x.shape[0],):
                    raise DimensionMismatchError(
                        f"{name} has shape {value.shape}, expected ({x.shape[0]},)"
                    )
                object.__setattr__(self, name, value)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def input_dim(self) -> int:
        return 0 if self.inputs is None else self.inputs.shape[1]

    @property
    def effective_dim(self) -> int:
        return self.dim + self.input_dim

    def __len__(self) -> int:
        return self.x.shape[0]

    def augmented(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ([x_k, u_k], [y_k, u_k]) under the zero-order hold."""
        if self.inputs is None:
            return self.x, self.y
        return np.hstack([self.x, self.inputs]), np.hstack([self.y, self.inputs])

    def scaled(self, factor: float) -> SnapshotDataset:
        """Dataset with states and inputs divided by `factor`."""
        return SnapshotDataset(
            x=self.x / factor,
            y=self.y / factor,
            sampling_period=self.sampling_period,
            inputs=None if self.inputs is None else self.inputs / factor,
            trajectory_ids=self.trajectory_ids,
            times=self.times,
        )

    def permuted(self, order: np.ndarray) -> SnapshotDataset:
        """Dataset with the snapshot pairs reordered."""
        order = np.asarray(order)
        return SnapshotDataset(
            x=self.x[order],
            y=self.y[order],
            sampling_period=self.sampling_period,
            inputs=None if self.inputs is None else self.inputs[order],
            trajectory_ids=None if self.trajectory_ids is None else self.trajectory_ids[order],
            times=None if self.times is None else self.times[order],
        )


@dataclass(frozen=True, eq=False)
class KoopmanEstimate:
    basis: MonomialBasis
    p_x: np.ndarray = field(repr=False)
    p_y: np.ndarray = field(repr=False)
    u_bar: np.ndarray = field(repr=False)
    l_bar_data: np.ndarray = field(repr=False)
    spectrum: SpectrumReport = field(repr=False)
    sampling_period: float
    rank: int
    # Relative Frobenius residual of P_x U - P_y
    residual: float
    underdetermined: bool

    def diagnostics(self) -> dict:
        return {
            "pairs": int(self.p_x.shape[0]),
            "basis_size": self.basis.size,
            "rank": self.rank,
            "underdetermined": self.underdetermined,
            "residual": self.residual,
            "spectrum": self.spectrum.to_dict(),
        }


def build_data_matrices(
    dataset: SnapshotDataset, basis: MonomialBasis
) -> tuple[np.ndarray, np.ndarray]:
    """Lift every snapshot pair; row k of P_x is p(x_k), row k of P_y is p(y_k)."""
    if len(dataset) == 0:
        raise DatasetError("Cannot build data matrices from an empty dataset")
    if basis.dim != dataset.effective_dim:
        raise DimensionMismatchError(
            f"Basis has {basis.dim} variables, dataset has effective dimension "
            f"{dataset.effective_dim}"
        )

    x, y = dataset.augmented()
    return lift(basis, x), lift(basis, y)


def estimate_koopman(
    p_x: np.ndarray, p_y: np.ndarray, rcond: float | None = None
) -> np.ndarray:
    """Least-squares solution of P_x U ~ P_y, i.e. U = pinv(P_x) P_y."""
    if p_x.shape != p_y.shape:
        raise DimensionMismatchError(
            f"P_x has shape {p_x.shape} but P_y has shape {p_y.shape}"
        )
    return lstsq(p_x, p_y, rcond)


@dataclass(frozen=True, eq=False)
class KoopmanFit:
    """Least-squares Koopman matrix, before any logarithm is taken."""

    p_x: np.ndarray = field(repr=False)
    p_y: np.ndarray = field(repr=False)
    u_bar: np.ndarray = field(repr=False)
    rank: int
    # Relative Frobenius residual of P_x U - P_y
    residual: float
    underdetermined: bool

    @property
    def pairs(self) -> int:
        return int(self.p_x.shape[0])

    @property
    def size(self) -> int:
        return int(self.p_x.shape[1])


def fit_koopman(
    dataset: SnapshotDataset,
    basis: MonomialBasis,
    rcond: float | None = None,
) -> KoopmanFit:
    """U = pinv(P_x) P_y with rank diagnostics; K < N gives the minimum-norm U."""
    with stage("lifting"):
        p_x, p_y = build_data_matrices(dataset, basis)
    if rcond is None:
        rcond = default_rcond(p_x)

    u_bar, rank = lstsq(p_x, p_y, rcond, return_rank=True)
    pairs, size = p_x.shape
    underdetermined = rank < size
    if underdetermined:
        _LOGGER.warning(
            "Koopman estimate is underdetermined: %d snapshot pairs, rank %d, "
            "%d basis functions; returning the minimum-norm solution",
            pairs,
            rank,
            size,
        )

    scale = np.linalg.norm(p_y)
    residual = float(np.linalg.norm(p_x @ u_bar - p_y) / scale) if scale > 0 else 0.0
    return KoopmanFit(
        p_x=p_x,
        p_y=p_y,
        u_bar=u_bar,
        rank=rank,
        residual=residual,
        underdetermined=underdetermined,
    )


def estimate_generator(
    dataset: SnapshotDataset,
    basis: MonomialBasis,
    rcond: float | None = None,
) -> KoopmanEstimate:
    """Projected Koopman matrix and data generator L = log(U) / T_s."""
    fit = fit_koopman(dataset, basis, rcond)
    context = f"({fit.pairs} snapshot pairs for {fit.size} basis functions)"

    try:
        with stage("logarithm"):
            logarithm, spectrum = logm_principal(fit.u_bar)
    except NegativeRealEigenvalueError as err:
        raise NegativeRealEigenvalueError(
            f"{err.args[0]} {context}",
            eigenvalues=err.eigenvalues,
            hint=NEGATIVE_EIGENVALUE_HINT,
            stage=err.stage,
        ) from err
    except SingularMatrixError as err:
        raise SingularMatrixError(f"{err.args[0]} {context}", stage=err.stage) from err

    _LOGGER.debug(
        "Estimated Koopman matrix %dx%d from %d pairs, rank %d, residual %.3e",
        fit.size,
        fit.size,
        fit.pairs,
        fit.rank,
        fit.residual,
    )

    return KoopmanEstimate(
        basis=basis,
        p_x=fit.p_x,
        p_y=fit.p_y,
        u_bar=fit.u_bar,
        l_bar_data=logarithm / dataset.sampling_period,
        spectrum=spectrum,
        sampling_period=dataset.sampling_period,
        rank=fit.rank,
        residual=fit.residual,
        underdetermined=fit.underdetermined,
    )
