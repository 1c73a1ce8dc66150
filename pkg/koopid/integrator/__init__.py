"""Abstract base class for fixed-step integrators."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable

import numpy as np

# rhs(t, x) for a K x n batch of states
RightHandSide = Callable[[float, np.ndarray], np.ndarray]


class Integrator(ABC):
    """Advance a batch of states over one sampling interval in equal substeps.

    Subclasses implement a single step. Stochastic schemes consume one
    standard-normal increment array of the state's shape per substep.
    """

    stochastic: bool = False

    def __init__(self, substeps: int) -> None:
        if substeps < 1:
            raise ValueError(f"Expected at least one substep, got {substeps}")
        self.substeps = substeps

    @abstractmethod
    def step(
        self,
        rhs: RightHandSide,
        t: float,
        x: np.ndarray,
        h: float,
        increment: np.ndarray | None = None,
    ) -> np.ndarray:
        pass

    def advance(
        self,
        rhs: RightHandSide,
        t0: float,
        x0: np.ndarray,
        duration: float,
        increments: np.ndarray | None = None,
    ) -> np.ndarray:
        """Integrate from t0 to t0 + duration.

        `increments` has shape (substeps, *x0.shape) for stochastic schemes.
        """
        if self.stochastic and (
            increments is None or increments.shape != (self.substeps, *x0.shape)
        ):
            raise ValueError(
                f"{type(self).__name__} needs increments of shape "
                f"{(self.substeps, *x0.shape)}"
            )

        h = duration / self.substeps
        x = np.array(x0, dtype=float)
        for substep in range(self.substeps):
            increment = None if increments is None else increments[substep]
            x = self.step(rhs, t0 + substep * h, x, h, increment)
        return x
