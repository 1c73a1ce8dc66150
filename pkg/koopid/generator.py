"""Projection of the Koopman generator onto monomial bases.

The operator p_k d/dx_j maps monomials of degree <= m1 into monomials of
degree <= m2 = m1 + m_F - 1. Its matrix has one nonzero per column at most:

    p_k d/dx_j p_l = psi_j(l) p_i   with   Psi(i) = Psi(k) + Psi(l) - e_j

The Laplacian sum_j d^2/dx_j^2 maps a degree d monomial to degree d - 2, so
its nonzeros never coincide with the nonzeros of any p_k d/dx_j block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Final, Iterator

import numpy as np
import scipy.sparse

from .basis import MonomialBasis, MultiIndex, basis_size, build_basis, index_of
from .error import ConfigurationError, DimensionMismatchError, OutOfBasisError
from .linalg import vec

_LOGGER: Final = logging.getLogger(__name__)


def _check_pair(basis_m1: MonomialBasis, basis_m2: MonomialBasis) -> None:
    if basis_m1.dim != basis_m2.dim:
        raise DimensionMismatchError(
            f"Bases have {basis_m1.dim} and {basis_m2.dim} variables"
        )
    if basis_m1.max_degree > basis_m2.max_degree:
        raise ConfigurationError(
            f"Source degree {basis_m1.max_degree} exceeds target degree "
            f"{basis_m2.max_degree}"
        )


def _block_entries(
    j: int, s_k: MultiIndex, basis_m1: MonomialBasis, basis_m2: MonomialBasis
) -> Iterator[tuple[int, int, int]]:
    """Yield 0-based (row, column, value) entries of the p_k d/dx_j block."""
    for l, s_l in enumerate(basis_m1.ordered_indices):
        power = s_l[j]
        if power == 0:
            continue
        target = [a + b for a, b in zip(s_k, s_l)]
        target[j] -= 1
        yield index_of(basis_m2, target) - 1, l, power


def generator_block(
    j: int, k: int, basis_m1: MonomialBasis, basis_m2: MonomialBasis
) -> np.ndarray:
    """Dense N2 x N1 matrix of p_k d/dx_j for 1-based j and k.

    k is a position in the shared graded ordering, so the same k names the
    same monomial in every basis of sufficient degree.
    """
    _check_pair(basis_m1, basis_m2)
    if not 1 <= j <= basis_m1.dim:
        raise IndexError(f"Variable index {j} outside 1..{basis_m1.dim}")

    s_k = basis_m2.multi_index_at(k)
    if sum(s_k) + basis_m1.max_degree - 1 > basis_m2.max_degree:
        raise OutOfBasisError(
            f"p_{k} d/dx_{j} maps degree {basis_m1.max_degree} beyond target degree "
            f"{basis_m2.max_degree}"
        )

    block = np.zeros((basis_m2.size, basis_m1.size))
    for i, l, value in _block_entries(j - 1, s_k, basis_m1, basis_m2):
        block[i, l] = value
    return block


def laplacian_matrix(basis_m1: MonomialBasis, basis_m2: MonomialBasis) -> np.ndarray:
    """Dense N2 x N1 matrix of the Laplacian sum_j d^2/dx_j^2."""
    _check_pair(basis_m1, basis_m2)

    matrix = np.zeros((basis_m2.size, basis_m1.size))
    for l, s_l in enumerate(basis_m1.ordered_indices):
        for j, power in enumerate(s_l):
            if power < 2:
                continue
            target = list(s_l)
            target[j] -= 2
            matrix[index_of(basis_m2, target) - 1, l] += power * (power - 1)
    return matrix


@dataclass(frozen=True, eq=False)
class GeneratorSystem:
    """All p_k d/dx_j blocks for one (n, m1, m_F), stored as vec columns.

    Column (j - 1) * N_F + (k - 1) of `columns` is vec of the block for
    (j, k); the vec row of block entry (i, l) is i + l * N2 (0-based).
    """

    n: int
    m1: int
    m_f: int
    basis_m1: MonomialBasis = field(repr=False)
    basis_m2: MonomialBasis = field(repr=False)
    columns: scipy.sparse.csc_array = field(repr=False)
    diffusion: np.ndarray | None = field(default=None, repr=False)

    @property
    def m2(self) -> int:
        return self.m1 + self.m_f - 1

    @property
    def n_f(self) -> int:
        return basis_size(self.n, self.m_f)

    @cached_property
    def basis_f(self) -> MonomialBasis:
        return build_basis(self.n, self.m_f)

    def column_index(self, j: int, k: int) -> int:
        return (j - 1) * self.n_f + (k - 1)

    def block(self, j: int, k: int) -> np.ndarray:
        """Dense block for 1-based (j, k)."""
        column = self.columns[:, [self.column_index(j, k)]].toarray().ravel()
        return column.reshape(self.basis_m2.size, self.basis_m1.size, order="F")

    def blocks(self) -> Iterator[tuple[tuple[int, int], np.ndarray]]:
        for j in range(1, self.n + 1):
            for k in range(1, self.n_f + 1):
                yield (j, k), self.block(j, k)


def build_generator_system(
    n: int, m1: int, m_f: int, include_diffusion: bool = False
) -> GeneratorSystem:
    if m1 < 1 or m_f < 1:
        raise ConfigurationError(f"Expected m1 >= 1 and m_F >= 1, got {m1} and {m_f}")

    m2 = m1 + m_f - 1
    basis_m1 = build_basis(n, m1)
    basis_m2 = build_basis(n, m2)
    n_f = basis_size(n, m_f)
    n2 = basis_m2.size

    rows: list[int] = []
    cols: list[int] = []
    values: list[int] = []
    for j in range(n):
        for k in range(n_f):
            s_k = basis_m2.ordered_indices[k]
            for i, l, value in _block_entries(j, s_k, basis_m1, basis_m2):
                rows.append(i + l * n2)
                cols.append(j * n_f + k)
                values.append(value)

    columns = scipy.sparse.csc_array(
        (np.asarray(values, dtype=float), (rows, cols)),
        shape=(n2 * basis_m1.size, n * n_f),
    )

    _LOGGER.debug(
        "Built generator system n=%d m1=%d m_F=%d: %d blocks of %dx%d, %d nonzeros",
        n,
        m1,
        m_f,
        n * n_f,
        n2,
        basis_m1.size,
        columns.nnz,
    )

    return GeneratorSystem(
        n=n,
        m1=m1,
        m_f=m_f,
        basis_m1=basis_m1,
        basis_m2=basis_m2,
        columns=columns,
        diffusion=laplacian_matrix(basis_m1, basis_m2) if include_diffusion else None,
    )


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Design matrix with equalities independent of every unknown removed."""

    matrix: scipy.sparse.csr_array = field(repr=False)
    # vec positions of L_hat that survive, in row order of `matrix`
    kept_rows: np.ndarray = field(repr=False)
    total_rows: int
    include_diffusion: bool
    diffusion_identifiable: bool

    @property
    def dropped_rows(self) -> int:
        return self.total_rows - len(self.kept_rows)

    @property
    def effective_equalities(self) -> int:
        return len(self.kept_rows)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def assemble_design(gen: GeneratorSystem, include_diffusion: bool = False) -> DesignMatrix:
    """Stack vec(block) columns in (j, k) order, plus vec(D) when requested.

    Rows that are zero in every column are dropped; the kept row set is
    recorded so the data side can be trimmed identically.
    """
    full = gen.columns
    if include_diffusion:
        diffusion = gen.diffusion
        if diffusion is None:
            diffusion = laplacian_matrix(gen.basis_m1, gen.basis_m2)
        diffusion_column = scipy.sparse.csc_array(vec(diffusion).reshape(-1, 1))
        full = scipy.sparse.hstack([full, diffusion_column], format="csc")

    full = scipy.sparse.csr_array(full)
    kept_rows = np.flatnonzero(np.diff(full.indptr) > 0)
    matrix = scipy.sparse.csr_array(full[kept_rows])

    diffusion_identifiable = False
    if include_diffusion:
        last = matrix.shape[1] - 1
        diffusion_identifiable = bool(np.any(matrix.indices == last))
        if not diffusion_identifiable:
            _LOGGER.warning(
                "Diffusion is not identifiable with m1=%d: the Laplacian vanishes "
                "on every monomial of degree <= %d",
                gen.m1,
                gen.m1,
            )

    _LOGGER.debug(
        "Design matrix %dx%d, dropped %d of %d rows",
        matrix.shape[0],
        matrix.shape[1],
        full.shape[0] - len(kept_rows),
        full.shape[0],
    )

    return DesignMatrix(
        matrix=matrix,
        kept_rows=kept_rows,
        total_rows=full.shape[0],
        include_diffusion=include_diffusion,
        diffusion_identifiable=diffusion_identifiable,
    )
