"""Classical fourth-order Runge-Kutta integrator."""

from __future__ import annotations

import numpy as np

from . import Integrator, RightHandSide


class RungeKuttaIntegrator(Integrator):
    """Fixed-step RK4; increments are ignored."""

    def step(
        self,
        rhs: RightHandSide,
        t: float,
        x: np.ndarray,
        h: float,
        increment: np.ndarray | None = None,
    ) -> np.ndarray:
        k1 = rhs(t, x)
        k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = rhs(t + h, x + h * k3)
        return x + h * (k1 + 2.0 * (k2 + k3) + k4) / 6.0
