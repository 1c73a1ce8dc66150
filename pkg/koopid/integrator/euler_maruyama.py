"""Euler-Maruyama scheme for additive isotropic white noise."""

from __future__ import annotations

import math

import numpy as np

from . import Integrator, RightHandSide


class EulerMaruyamaIntegrator(Integrator):
    """dx = F(x) dt + sigma dW, each substep adds sigma * sqrt(h) * Z.

    With sigma = 0 this is the explicit Euler method.
    """

    stochastic = True

    def __init__(self, substeps: int, sigma: float) -> None:
        if sigma < 0:
            raise ValueError(f"Expected a nonnegative noise intensity, got {sigma}")
        self.sigma = sigma
        super().__init__(substeps)

    def step(
        self,
        rhs: RightHandSide,
        t: float,
        x: np.ndarray,
        h: float,
        increment: np.ndarray | None = None,
    ) -> np.ndarray:
        drift = x + h * rhs(t, x)
        if increment is None or self.sigma == 0.0:
            return drift
        return drift + self.sigma * math.sqrt(h) * increment
