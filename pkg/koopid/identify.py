"""Vector-field identification from the data generator.

Step 1 estimates L_data = log(pinv(P_x) P_y) / T_s on the degree-m2 basis.
Step 2 keeps the leading N2 x N1 block of L_data and solves

    sum_{j,k} w^j_k vec(L^j_k) [+ (sigma^2 / 2) vec(D)] = vec(L_hat)

in the least-squares sense.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Final, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .basis import MonomialBasis, MultiIndex, basis_size, build_basis, index_of
from .config import IdentificationConfig
from .edmd import KoopmanEstimate, SnapshotDataset, estimate_generator
from .error import ConfigurationError, DimensionMismatchError, stage
from .generator import GeneratorSystem, assemble_design, build_generator_system
from .linalg import lstsq, vec

_LOGGER: Final = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PolynomialVectorField:
    """F_j(x, u) = sum_k w^j_k p_k(x, u) over the degree-m_F graded basis.

    The basis has dim + input_dim variables, states first; rows of
    `coefficients` are the dim state equations.
    """

    dim: int
    degree: int
    coefficients: np.ndarray = field(repr=False)
    input_dim: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1 or self.degree < 1:
            raise ConfigurationError(
                f"Expected dim >= 1 and degree >= 1, got {self.dim} and {self.degree}"
            )
        coefficients = np.array(self.coefficients, dtype=float)
        expected = (self.dim, basis_size(self.dim + self.input_dim, self.degree))
        if coefficients.shape != expected:
            raise DimensionMismatchError(
                f"Coefficient table has shape {coefficients.shape}, expected {expected}"
            )
        if not np.all(np.isfinite(coefficients)):
            raise ValueError("Coefficient table contains non-finite values")
        coefficients.setflags(write=False)
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def variables(self) -> int:
        return self.dim + self.input_dim

    @cached_property
    def basis(self) -> MonomialBasis:
        return build_basis(self.variables, self.degree)

    @property
    def variable_names(self) -> list[str]:
        return [f"x_{i + 1}" for i in range(self.dim)] + [
            f"u_{i + 1}" for i in range(self.input_dim)
        ]

    def monomial_labels(self) -> list[str]:
        names = self.variable_names
        return [self.basis.label(k, names) for k in range(1, self.basis.size + 1)]

    def coefficient(self, j: int, s: Sequence[int]) -> float:
        """w^j_k for the 1-based equation j and the monomial with exponents s."""
        return float(self.coefficients[j - 1, index_of(self.basis, s) - 1])

    @classmethod
    def zeros(cls, dim: int, degree: int, input_dim: int = 0) -> PolynomialVectorField:
        return cls(
            dim=dim,
            degree=degree,
            coefficients=np.zeros((dim, basis_size(dim + input_dim, degree))),
            input_dim=input_dim,
        )

    @classmethod
    def from_terms(
        cls,
        dim: int,
        degree: int,
        terms: Mapping[tuple[int, MultiIndex], float],
        input_dim: int = 0,
    ) -> PolynomialVectorField:
        """Build a field from {(j, exponents): coefficient}; coincident terms add up."""
        basis = build_basis(dim + input_dim, degree)
        coefficients = np.zeros((dim, basis.size))
        for (j, s), value in terms.items():
            coefficients[j - 1, index_of(basis, s) - 1] += value
        return cls(dim=dim, degree=degree, coefficients=coefficients, input_dim=input_dim)

    def permuted(self, order: Sequence[int]) -> PolynomialVectorField:
        """Field in relabeled states x'_i = x_{order[i]} (0-based order)."""
        order = [int(i) for i in order]
        if sorted(order) != list(range(self.dim)):
            raise ValueError(f"{order} is not a permutation of 0..{self.dim - 1}")

        full_order = order + list(range(self.dim, self.variables))
        basis = self.basis
        permuted = np.zeros_like(self.coefficients)
        for k_new, s_new in enumerate(basis.ordered_indices):
            s_old = [0] * self.variables
            for i, source in enumerate(full_order):
                s_old[source] = s_new[i]
            k_old = basis.reverse_map[tuple(s_old)] - 1
            permuted[:, k_new] = self.coefficients[order, k_old]

        return PolynomialVectorField(
            dim=self.dim,
            degree=self.degree,
            coefficients=permuted,
            input_dim=self.input_dim,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "degree": self.degree,
            "input_dim": self.input_dim,
            "monomial_order": [list(s) for s in self.basis.ordered_indices],
            "monomial_labels": self.monomial_labels(),
            "coefficients": self.coefficients.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PolynomialVectorField:
        """Read a field; columns are matched by exponent, not by position."""
        try:
            dim = int(data["dim"])
            degree = int(data["degree"])
            input_dim = int(data.get("input_dim", 0))
            table = np.asarray(data["coefficients"], dtype=float)
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigurationError(f"Malformed vector field: {err}") from err

        order = data.get("monomial_order")
        if order is None:
            return cls(dim=dim, degree=degree, coefficients=table, input_dim=input_dim)

        basis = build_basis(dim + input_dim, degree)
        if table.ndim != 2 or table.shape != (dim, len(order)):
            raise ConfigurationError(
                f"Coefficient table has shape {table.shape}, "
                f"expected ({dim}, {len(order)})"
            )
        coefficients = np.zeros((dim, basis.size))
        for column, s in enumerate(order):
            coefficients[:, index_of(basis, s) - 1] = table[:, column]
        return cls(dim=dim, degree=degree, coefficients=coefficients, input_dim=input_dim)


@dataclass(frozen=True, eq=False)
class CoefficientSolution:
    """Least-squares solution of the vec-stacked generator equation."""

    # n x N_F table, rows are equations j, columns monomials k
    weights: np.ndarray = field(repr=False)
    # sigma^2 / 2 as estimated, None when not requested or not identifiable
    diffusion: float | None
    sigma_proc_hat: float | None
    residual: float
    rank: int
    unknowns: int
    dropped_rows: int
    effective_equalities: int

    @property
    def full_rank(self) -> bool:
        return self.rank == self.unknowns


@dataclass(frozen=True, eq=False)
class IdentificationResult:
    field: PolynomialVectorField
    sigma_proc_hat: float | None
    residual: float
    koopman: KoopmanEstimate = field(repr=False)
    dropped_rows: int
    effective_equalities: int
    design_rank: int
    design_full_rank: bool
    config: IdentificationConfig
    scale: float = 1.0

    def diagnostics(self) -> dict[str, Any]:
        return {
            "residual": self.residual,
            "dropped_rows": self.dropped_rows,
            "effective_equalities": self.effective_equalities,
            "design_rank": self.design_rank,
            "design_full_rank": self.design_full_rank,
            "scale": self.scale,
            "config": self.config.to_dict(),
            "koopman": self.koopman.diagnostics(),
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.field.to_dict(),
            "sigma_proc_hat": self.sigma_proc_hat,
            "diagnostics": self.diagnostics(),
        }


def trim_generator(
    l_bar_data: np.ndarray, basis_m2: MonomialBasis, basis_m1: MonomialBasis
) -> np.ndarray:
    """Leading N2 x N1 block of L_data (rows degree <= m2, columns degree <= m1)."""
    n1, n2 = basis_m1.size, basis_m2.size
    if basis_m1.dim != basis_m2.dim:
        raise DimensionMismatchError(
            f"Bases have {basis_m1.dim} and {basis_m2.dim} variables"
        )
    if n1 > n2:
        raise ConfigurationError(f"N1={n1} exceeds N2={n2}; need m1 <= m2")
    if l_bar_data.shape != (n2, n2):
        raise DimensionMismatchError(
            f"Data generator has shape {l_bar_data.shape}, expected ({n2}, {n2})"
        )
    return np.array(l_bar_data[:n2, :n1])


def _column_groups(matrix: scipy.sparse.csr_array) -> Iterator[np.ndarray]:
    """Groups of columns coupled through shared rows.

    The normal matrix A^T A is block diagonal over these groups, so each
    group is an independent least-squares problem.
    """
    magnitude = abs(matrix)
    coupling = magnitude.T @ magnitude
    count, labels = scipy.sparse.csgraph.connected_components(
        scipy.sparse.csr_matrix(coupling), directed=False
    )
    order = np.argsort(labels, kind="stable")
    boundaries = np.flatnonzero(np.diff(labels[order])) + 1
    _LOGGER.debug("Design splits into %d independent column groups", count)
    yield from np.split(order, boundaries)


def solve_coefficients(
    l_hat: np.ndarray,
    gen: GeneratorSystem,
    include_diffusion: bool = False,
    rcond: float | None = None,
) -> CoefficientSolution:
    """Minimum-norm least-squares coefficients w^j_k (and sigma^2 / 2)."""
    expected = (gen.basis_m2.size, gen.basis_m1.size)
    if l_hat.shape != expected:
        raise DimensionMismatchError(
            f"Trimmed generator has shape {l_hat.shape}, expected {expected}"
        )

    design = assemble_design(gen, include_diffusion)
    rhs = vec(l_hat)[design.kept_rows]
    matrix = design.matrix
    columns = scipy.sparse.csc_array(matrix)

    solution = np.zeros(matrix.shape[1])
    rank = 0
    residual_squared = 0.0
    for group in _column_groups(matrix):
        block = columns[:, group]
        rows = np.unique(block.indices)
        if rows.size == 0:
            continue
        dense = scipy.sparse.csr_array(block)[rows].toarray()
        weights, group_rank = lstsq(dense, rhs[rows], rcond, return_rank=True)
        solution[group] = weights
        rank += group_rank
        residual_squared += float(np.sum((dense @ weights - rhs[rows]) ** 2))

    unknowns = gen.n * gen.n_f
    if include_diffusion and design.diffusion_identifiable:
        unknowns += 1
    if rank < unknowns:
        _LOGGER.warning(
            "Design matrix is rank deficient (rank %d for %d unknowns); "
            "returning the minimum-norm solution",
            rank,
            unknowns,
        )

    diffusion = None
    sigma_proc_hat = None
    if include_diffusion and design.diffusion_identifiable:
        diffusion = float(solution[-1])
        sigma_proc_hat = math.sqrt(2.0 * max(diffusion, 0.0))

    return CoefficientSolution(
        weights=solution[: gen.n * gen.n_f].reshape(gen.n, gen.n_f),
        diffusion=diffusion,
        sigma_proc_hat=sigma_proc_hat,
        residual=math.sqrt(residual_squared),
        rank=rank,
        unknowns=unknowns,
        dropped_rows=design.dropped_rows,
        effective_equalities=design.effective_equalities,
    )


def _resolve_input_dim(dataset: SnapshotDataset, config: IdentificationConfig) -> int:
    if config.input_dim is None:
        return dataset.input_dim
    if config.input_dim > 0 and dataset.inputs is None:
        raise ConfigurationError(
            f"input_dim={config.input_dim} requested but the dataset has no inputs"
        )
    if config.input_dim != dataset.input_dim:
        raise ConfigurationError(
            f"input_dim={config.input_dim} does not match the dataset's "
            f"{dataset.input_dim} input(s)"
        )
    return config.input_dim


def identify(
    dataset: SnapshotDataset, config: IdentificationConfig | None = None
) -> IdentificationResult:
    """Identify the polynomial vector field behind a snapshot dataset."""
    config = config or IdentificationConfig()

    with stage("configuration"):
        input_dim = _resolve_input_dim(dataset, config)
    dim = dataset.dim
    variables = dim + input_dim

    scale = 1.0
    working = dataset
    if config.rescale and len(dataset) > 0:
        x, y = dataset.augmented()
        largest = float(max(np.abs(x).max(), np.abs(y).max()))
        if largest > 0:
            scale = largest
            working = dataset.scaled(scale)

    _LOGGER.debug(
        "Identifying %d-dimensional field (%d inputs) from %d pairs with %s",
        dim,
        input_dim,
        len(dataset),
        config,
    )

    with stage("basis"):
        basis_m2 = build_basis(variables, config.m2)
        basis_m1 = build_basis(variables, config.m1)
    with stage("koopman"):
        koopman = estimate_generator(working, basis_m2, config.rcond)
    with stage("trimming"):
        l_hat = trim_generator(koopman.l_bar_data, basis_m2, basis_m1)
    with stage("generator"):
        gen = build_generator_system(
            variables, config.m1, config.m_f, include_diffusion=config.estimate_diffusion
        )
    with stage("solve"):
        solution = solve_coefficients(
            l_hat, gen, include_diffusion=config.estimate_diffusion, rcond=config.rcond
        )

    weights = solution.weights
    sigma_proc_hat = solution.sigma_proc_hat
    if scale != 1.0:
        # x = s z turns the coefficient of a degree-d monomial into w s^(1 - d)
        weights = weights * scale ** (1.0 - gen.basis_f.degrees.astype(float))
        if sigma_proc_hat is not None:
            sigma_proc_hat *= scale

    return IdentificationResult(
        field=PolynomialVectorField(
            dim=dim,
            degree=config.m_f,
            coefficients=weights[:dim],
            input_dim=input_dim,
        ),
        sigma_proc_hat=sigma_proc_hat,
        residual=solution.residual,
        koopman=koopman,
        dropped_rows=solution.dropped_rows,
        effective_equalities=solution.effective_equalities,
        design_rank=solution.rank,
        design_full_rank=solution.full_rank,
        config=config,
        scale=scale,
    )
