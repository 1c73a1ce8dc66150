"""Tests for the fixed-step integrators."""

import numpy as np
import pytest

from koopid.dynamics import LORENZ, builtin_system, evaluate_field
from koopid.integrator.euler_maruyama import EulerMaruyamaIntegrator
from koopid.integrator.rk4 import RungeKuttaIntegrator


def _decay(t, x):
    return -x


class TestRungeKutta:
    def test_single_step_is_fourth_order_taylor(self):
        h = 0.1
        x = RungeKuttaIntegrator(1).advance(_decay, 0.0, np.array([[2.0]]), h)
        expected = 2.0 * (1 - h + h**2 / 2 - h**3 / 6 + h**4 / 24)
        assert x[0, 0] == pytest.approx(expected, rel=1e-14)

    def test_order_on_lorenz(self):
        field = builtin_system(LORENZ).field
        rhs = lambda t, x: evaluate_field(field, x)  # noqa: E731
        x0 = np.array([[1.0, 1.0, 1.0]])

        reference = RungeKuttaIntegrator(400).advance(rhs, 0.0, x0, 0.1)
        coarse = RungeKuttaIntegrator(20).advance(rhs, 0.0, x0, 0.1)
        fine = RungeKuttaIntegrator(40).advance(rhs, 0.0, x0, 0.1)

        ratio = np.linalg.norm(coarse - reference) / np.linalg.norm(fine - reference)
        assert 12.0 <= ratio <= 20.0

    def test_batch_rows_are_independent(self):
        x0 = np.array([[1.0], [-3.0]])
        batch = RungeKuttaIntegrator(10).advance(_decay, 0.0, x0, 0.5)
        single = RungeKuttaIntegrator(10).advance(_decay, 0.0, x0[1:], 0.5)
        assert batch[1, 0] == single[0, 0]

    def test_rejects_zero_substeps(self):
        with pytest.raises(ValueError):
            RungeKuttaIntegrator(0)


class TestEulerMaruyama:
    def test_without_noise_is_explicit_euler(self):
        integrator = EulerMaruyamaIntegrator(4, sigma=0.0)
        x0 = np.array([[1.0]])
        x = integrator.advance(_decay, 0.0, x0, 0.4, np.ones((4, 1, 1)))
        assert x[0, 0] == pytest.approx(0.9**4, rel=1e-14)

    def test_increment_scaling(self):
        integrator = EulerMaruyamaIntegrator(1, sigma=2.0)
        zero = lambda t, x: np.zeros_like(x)  # noqa: E731
        x = integrator.advance(zero, 0.0, np.zeros((1, 1)), 0.25, np.full((1, 1, 1), 3.0))
        # sigma * sqrt(h) * Z
        assert x[0, 0] == pytest.approx(2.0 * 0.5 * 3.0)

    def test_requires_increments(self):
        integrator = EulerMaruyamaIntegrator(5, sigma=1.0)
        with pytest.raises(ValueError, match="increments"):
            integrator.advance(_decay, 0.0, np.zeros((2, 1)), 1.0)
        with pytest.raises(ValueError, match="increments"):
            integrator.advance(_decay, 0.0, np.zeros((2, 1)), 1.0, np.zeros((4, 2, 1)))

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            EulerMaruyamaIntegrator(1, sigma=-0.1)
