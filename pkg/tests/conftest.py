"""Shared fixtures: exact-flow datasets for affine systems."""

from __future__ import annotations

from typing import Callable

import numpy as np
import pytest
import scipy.linalg

from koopid.edmd import SnapshotDataset


def affine_flow_pairs(
    a: np.ndarray,
    b: np.ndarray | None,
    sampling_period: float,
    pairs: int,
    bound: float = 1.0,
    seed: int = 0,
) -> SnapshotDataset:
    """Noise-free pairs of dx/dt = A x + b, exact through the augmented exponential."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    dim = a.shape[0]
    b = np.zeros(dim) if b is None else np.asarray(b, dtype=float)

    augmented = np.zeros((dim + 1, dim + 1))
    augmented[:dim, :dim] = a
    augmented[:dim, dim] = b
    flow = scipy.linalg.expm(augmented * sampling_period)

    rng = np.random.default_rng(seed)
    x = rng.uniform(-bound, bound, size=(pairs, dim))
    y = x @ flow[:dim, :dim].T + flow[:dim, dim]
    return SnapshotDataset(x=x, y=y, sampling_period=sampling_period)


@pytest.fixture
def affine_dataset() -> Callable[..., SnapshotDataset]:
    return affine_flow_pairs


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
