"""Ordered multivariate monomial bases.

Monomials x_1^s_1 ... x_n^s_n of total degree at most m are kept in graded
lexicographic order: total degree ascending, then the exponent tuple in
descending lexicographic order (larger s_1 first). Position 1 is the constant
monomial, and a basis of degree m1 is always a leading prefix of a basis of
degree m2 >= m1 in the same number of variables.

Public positions are 1-based.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations_with_replacement
from typing import Final, Iterator, Sequence

import numpy as np

from .error import BasisTooLargeError, DatasetError, DimensionMismatchError, OutOfBasisError

_LOGGER: Final = logging.getLogger(__name__)

MultiIndex = tuple[int, ...]


def basis_size(n: int, m: int) -> int:
    """Number of monomials of total degree <= m in n variables."""
    if n < 1 or m < 0:
        raise ValueError(f"Expected n >= 1 and m >= 0, got n={n}, m={m}")

    size = math.comb(n + m, m)
    if size > np.iinfo(np.intp).max:
        raise BasisTooLargeError(
            f"Basis with n={n}, m={m} has {size} monomials, "
            "more than a native array index can address"
        )
    return size


def total_degree(s: MultiIndex) -> int:
    return sum(s)


def _graded_lex_key(s: MultiIndex) -> tuple[int, tuple[int, ...]]:
    return sum(s), tuple(-e for e in s)


def _enumerate(n: int, m: int) -> list[MultiIndex]:
    indices: list[MultiIndex] = []
    for degree in range(m + 1):
        block = []
        for variables in combinations_with_replacement(range(n), degree):
            exponents = [0] * n
            for variable in variables:
                exponents[variable] += 1
            block.append(tuple(exponents))
        indices.extend(sorted(block, key=_graded_lex_key))
    return indices


@dataclass(frozen=True)
class MonomialBasis:
    """Graded lexicographic monomial basis in `dim` variables up to `max_degree`."""

    dim: int
    max_degree: int
    ordered_indices: tuple[MultiIndex, ...] = field(repr=False)
    reverse_map: dict[MultiIndex, int] = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.ordered_indices)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self.ordered_indices)

    @property
    def size(self) -> int:
        return len(self.ordered_indices)

    def multi_index_at(self, k: int) -> MultiIndex:
        """Return Psi(k) for the 1-based position k."""
        if not 1 <= k <= self.size:
            raise IndexError(f"Position {k} outside 1..{self.size}")
        return self.ordered_indices[k - 1]

    def degree_at(self, k: int) -> int:
        return total_degree(self.multi_index_at(k))

    def contains(self, s: MultiIndex) -> bool:
        return tuple(s) in self.reverse_map

    @cached_property
    def exponents(self) -> np.ndarray:
        """Exponent table, one row per monomial."""
        table = np.array(self.ordered_indices, dtype=np.int64).reshape(
            self.size, self.dim
        )
        table.setflags(write=False)
        return table

    @cached_property
    def degrees(self) -> np.ndarray:
        degrees = self.exponents.sum(axis=1)
        degrees.setflags(write=False)
        return degrees

    @cached_property
    def _recurrence(self) -> tuple[np.ndarray, np.ndarray]:
        # Every non-constant monomial is a lower-degree monomial times one variable
        parents = np.zeros(self.size, dtype=np.intp)
        variables = np.zeros(self.size, dtype=np.intp)
        for position, s in enumerate(self.ordered_indices[1:], start=1):
            variable = next(i for i, e in enumerate(s) if e > 0)
            parent = list(s)
            parent[variable] -= 1
            parents[position] = self.reverse_map[tuple(parent)] - 1
            variables[position] = variable
        return parents, variables

    def label(self, k: int, names: Sequence[str] | None = None) -> str:
        """Human-readable monomial, e.g. ``x_1^2*x_3``."""
        s = self.multi_index_at(k)
        if names is None:
            names = [f"x_{i + 1}" for i in range(self.dim)]
        factors = []
        for name, exponent in zip(names, s):
            if exponent == 1:
                factors.append(name)
            elif exponent > 1:
                factors.append(f"{name}^{exponent}")
        return "*".join(factors) if factors else "1"


def build_basis(n: int, m: int) -> MonomialBasis:
    size = basis_size(n, m)
    ordered = tuple(_enumerate(n, m))
    if len(ordered) != size:
        raise RuntimeError(f"Enumerated {len(ordered)} monomials, expected {size}")

    _LOGGER.debug("Built monomial basis n=%d m=%d with %d monomials", n, m, size)
    return MonomialBasis(
        dim=n,
        max_degree=m,
        ordered_indices=ordered,
        reverse_map={s: k for k, s in enumerate(ordered, start=1)},
    )


def index_of(basis: MonomialBasis, s: Sequence[int]) -> int:
    """Return Psi^-1(s), the 1-based position of the multi-index s."""
    s = tuple(int(e) for e in s)
    if len(s) != basis.dim:
        raise DimensionMismatchError(
            f"Multi-index {s} has length {len(s)}, basis dimension is {basis.dim}"
        )
    if any(e < 0 for e in s):
        raise OutOfBasisError(f"Multi-index {s} has a negative exponent")
    if total_degree(s) > basis.max_degree:
        raise OutOfBasisError(
            f"Multi-index {s} has degree {total_degree(s)}, "
            f"basis degree is {basis.max_degree}"
        )
    return basis.reverse_map[s]


def lift(basis: MonomialBasis, x: np.ndarray) -> np.ndarray:
    """Evaluate every basis monomial at x.

    `x` is a single point of length n or a K x n batch; the result is a
    vector of length N or a K x N matrix.
    """
    points = np.asarray(x, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)

    if points.shape[1] != basis.dim:
        raise DimensionMismatchError(
            f"Point dimension {points.shape[1]} does not match basis dimension {basis.dim}"
        )
    if not np.all(np.isfinite(points)):
        raise DatasetError("Cannot lift non-finite states")

    parents, variables = basis._recurrence
    values = np.empty((points.shape[0], basis.size))
    values[:, 0] = 1.0
    for k in range(1, basis.size):
        values[:, k] = values[:, parents[k]] * points[:, variables[k]]

    return values[0] if single else values
