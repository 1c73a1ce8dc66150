"""Tests for snapshot datasets and the Koopman matrix estimate."""

import logging

import numpy as np
import pytest
import scipy.linalg

from koopid.basis import build_basis, lift
from koopid.edmd import (
    NEGATIVE_EIGENVALUE_HINT,
    SnapshotDataset,
    build_data_matrices,
    estimate_generator,
    estimate_koopman,
    fit_koopman,
)
from koopid.error import DatasetError, DimensionMismatchError, NegativeRealEigenvalueError


class TestSnapshotDataset:
    """Validation of snapshot pairs."""

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            SnapshotDataset(x=np.zeros((3, 2)), y=np.zeros((3, 3)), sampling_period=0.1)

    def test_non_positive_sampling_period(self):
        with pytest.raises(DatasetError):
            SnapshotDataset(x=np.zeros((3, 2)), y=np.zeros((3, 2)), sampling_period=0.0)

    def test_non_finite_values(self):
        x = np.zeros((3, 2))
        x[1, 1] = np.inf
        with pytest.raises(DatasetError):
            SnapshotDataset(x=x, y=np.zeros((3, 2)), sampling_period=0.1)

    def test_inputs_are_columns_and_augment_both_sides(self):
        dataset = SnapshotDataset(
            x=np.ones((4, 2)), y=2 * np.ones((4, 2)), sampling_period=0.1, inputs=np.arange(4.0)
        )
        assert dataset.input_dim == 1
        assert dataset.effective_dim == 3
        x, y = dataset.augmented()
        np.testing.assert_array_equal(x[:, 2], np.arange(4.0))
        np.testing.assert_array_equal(y[:, 2], np.arange(4.0))

    def test_input_count_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            SnapshotDataset(
                x=np.ones((4, 2)), y=np.ones((4, 2)), sampling_period=0.1, inputs=np.ones(3)
            )


class TestDataMatrices:
    """Lifting of snapshot pairs."""

    def test_rows_are_lifted_pairs(self, affine_dataset):
        dataset = affine_dataset(np.array([[-1.0, 0.5], [0.0, -2.0]]), None, 0.1, 12)
        basis = build_basis(2, 3)
        p_x, p_y = build_data_matrices(dataset, basis)
        assert p_x.shape == (12, basis.size)
        np.testing.assert_allclose(p_x[5], lift(basis, dataset.x[5]))
        np.testing.assert_allclose(p_y[5], lift(basis, dataset.y[5]))

    def test_empty_dataset(self):
        dataset = SnapshotDataset(x=np.zeros((0, 2)), y=np.zeros((0, 2)), sampling_period=0.1)
        with pytest.raises(DatasetError) as excinfo:
            estimate_generator(dataset, build_basis(2, 2))
        assert excinfo.value.stage == "lifting"

    def test_basis_dimension_mismatch(self, affine_dataset):
        dataset = affine_dataset(-np.eye(2), None, 0.1, 12)
        with pytest.raises(DimensionMismatchError):
            build_data_matrices(dataset, build_basis(3, 2))


class TestGeneratorEstimate:
    """L_data = log(U) / T_s."""

    def test_koopman_matrix_of_linear_flow(self, affine_dataset):
        a = np.array([[-0.5, 1.0], [-1.0, -0.5]])
        dataset = affine_dataset(a, None, 0.2, 20)
        basis = build_basis(2, 1)
        u_bar = estimate_koopman(*build_data_matrices(dataset, basis))

        expected = np.eye(3)
        expected[1:, 1:] = scipy.linalg.expm(0.2 * a).T
        np.testing.assert_allclose(u_bar, expected, atol=1e-10)

    def test_generator_does_not_depend_on_sampling_period(self, affine_dataset):
        a = np.array([[-0.5, 1.0], [-1.0, -0.5]])
        basis = build_basis(2, 1)
        expected = np.zeros((3, 3))
        expected[1:, 1:] = a.T

        for sampling_period in (0.1, 0.2, 0.4):
            estimate = estimate_generator(affine_dataset(a, None, sampling_period, 20), basis)
            np.testing.assert_allclose(estimate.l_bar_data, expected, atol=1e-8)
            assert not estimate.underdetermined
            assert estimate.residual < 1e-10

    def test_negative_eigenvalue_carries_hint_and_stage(self):
        x = np.array([[1.0], [2.0], [3.0]])
        dataset = SnapshotDataset(x=x, y=-x, sampling_period=0.5)
        with pytest.raises(NegativeRealEigenvalueError) as excinfo:
            estimate_generator(dataset, build_basis(1, 1))

        error = excinfo.value
        assert error.hint == NEGATIVE_EIGENVALUE_HINT
        assert error.stage == "logarithm"
        assert "3 snapshot pairs for 2 basis functions" in str(error)

    def test_diagnostics_are_plain_data(self, affine_dataset):
        estimate = estimate_generator(
            affine_dataset(-np.eye(2), None, 0.1, 30), build_basis(2, 2)
        )
        diagnostics = estimate.diagnostics()
        assert diagnostics["pairs"] == 30
        assert diagnostics["basis_size"] == 6
        assert diagnostics["rank"] == 6


class TestKoopmanFit:
    """Least-squares Koopman matrix before the logarithm."""

    def test_scalar_linear_flow_is_diagonal_on_powers(self, affine_dataset):
        # p = (1, x, x^2) and y = e^{aT} x
        rate, sampling_period = -0.7, 0.3
        dataset = affine_dataset(np.array([[rate]]), None, sampling_period, 10)
        fit = fit_koopman(dataset, build_basis(1, 2))

        decay = np.exp(rate * sampling_period)
        np.testing.assert_allclose(fit.u_bar, np.diag([1.0, decay, decay**2]), atol=1e-12)
        assert not fit.underdetermined
        assert fit.rank == 3

    def test_pair_order_does_not_matter(self, rng):
        x = rng.uniform(-1.0, 1.0, size=(50, 2))
        y = 0.9 * x + 0.05 * rng.standard_normal((50, 2))
        dataset = SnapshotDataset(x=x, y=y, sampling_period=0.1)
        basis = build_basis(2, 2)

        original = fit_koopman(dataset, basis).u_bar
        shuffled = fit_koopman(dataset.permuted(rng.permutation(50)), basis).u_bar
        assert np.abs(original - shuffled).max() <= 1e-12

    def test_fewer_pairs_than_basis_functions(self, affine_dataset, caplog):
        dataset = affine_dataset(-np.eye(2), None, 0.1, 4)
        basis = build_basis(2, 2)

        with caplog.at_level(logging.WARNING, logger="koopid.edmd"):
            fit = fit_koopman(dataset, basis)
        assert fit.underdetermined
        assert fit.rank == 4
        assert fit.u_bar.shape == (6, 6)
        assert fit.residual < 1e-10
        assert "underdetermined" in caplog.text
