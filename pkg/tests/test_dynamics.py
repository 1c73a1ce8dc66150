"""Tests for data generation and the built-in systems."""

import logging

import numpy as np
import pytest

from koopid import dynamics
from koopid.dynamics import (
    DUFFING,
    DUFFING_NOISE,
    LORENZ,
    NETWORK,
    SYSTEMS,
    UNSTABLE,
    VDP,
    VDP_STANDARD,
    SimulationProtocol,
    builtin_system,
    evaluate_field,
    random_network_system,
    simulate,
    simulate_ode,
    simulate_sde,
    stays_bounded,
)
from koopid.error import (
    ConfigurationError,
    DatasetError,
    DimensionMismatchError,
    UnknownSystemError,
)
from koopid.identify import PolynomialVectorField
from koopid.metrics import reconstruct_links


def _protocol(dim=1, bound=1.0, **options):
    options.setdefault("snapshot_times", (0.0, 0.5))
    options.setdefault("trajectories", 20)
    return SimulationProtocol(initial_box=tuple((-bound, bound) for _ in range(dim)), **options)


def _constant(value: float) -> tuple[tuple[float, float]]:
    return ((value, value),)


class TestEvaluateField:
    def test_zero_field(self):
        field = PolynomialVectorField.zeros(3, 3)
        assert np.array_equal(evaluate_field(field, [0.3, -1.0, 2.0]), np.zeros(3))

    def test_van_der_pol_as_printed(self):
        field = builtin_system(VDP).field
        np.testing.assert_allclose(evaluate_field(field, [1.0, 1.0]), [1.0, -1.0])
        np.testing.assert_allclose(evaluate_field(field, [2.0, 1.0]), [1.0, -4.0])

    def test_van_der_pol_standard(self):
        field = builtin_system(VDP_STANDARD).field
        np.testing.assert_allclose(evaluate_field(field, [2.0, 1.0]), [1.0, -5.0])

    def test_lorenz(self):
        field = builtin_system(LORENZ).field
        np.testing.assert_allclose(
            evaluate_field(field, [1.0, 1.0, 1.0]), [0.0, 26.0, 1.0 - 8.0 / 3.0]
        )

    def test_batch(self):
        field = builtin_system(VDP).field
        values = evaluate_field(field, np.array([[1.0, 1.0], [2.0, 1.0]]))
        np.testing.assert_allclose(values, [[1.0, -1.0], [1.0, -4.0]])

    def test_forced_duffing(self):
        field = builtin_system(DUFFING).field
        np.testing.assert_allclose(evaluate_field(field, [1.0, 0.0], [1.0]), [0.0, 0.2])
        np.testing.assert_allclose(evaluate_field(field, [1.0, 0.0], [0.0]), [0.0, 0.0])

    def test_missing_input(self):
        with pytest.raises(DimensionMismatchError):
            evaluate_field(builtin_system(DUFFING).field, [1.0, 0.0])

    def test_wrong_state_length(self):
        with pytest.raises(DimensionMismatchError):
            evaluate_field(builtin_system(VDP).field, [1.0, 0.0, 2.0])


class TestSimulateOde:
    def test_still_field_without_noise(self):
        field = PolynomialVectorField.zeros(2, 3)
        dataset = simulate_ode(field, _protocol(dim=2, sigma_meas=0.0))
        assert np.array_equal(dataset.y, dataset.x)

    def test_exponential_decay(self):
        field = PolynomialVectorField.from_terms(1, 3, {(1, (1,)): -1.0})
        dataset = simulate_ode(field, _protocol(substeps=50, sigma_meas=0.0))
        np.testing.assert_allclose(dataset.y, dataset.x * np.exp(-0.5), rtol=0, atol=1e-8)

    def test_van_der_pol_pair_count(self):
        system = builtin_system(VDP)
        dataset = simulate(system.field, system.protocol)
        assert len(dataset) == 20
        assert dataset.sampling_period == pytest.approx(0.5)
        assert dataset.inputs is None

    def test_pairs_chain_within_trajectories(self):
        system = builtin_system(VDP)
        dataset = simulate(system.field, system.protocol.with_options({"sigma_meas": 0.0}))

        assert np.array_equal(dataset.trajectory_ids, np.repeat(np.arange(10), 2))
        assert np.array_equal(dataset.times, np.tile([0.0, 0.5], 10))
        assert np.array_equal(dataset.x[1::2], dataset.y[0::2])

    def test_multiplicative_measurement_noise(self):
        field = PolynomialVectorField.zeros(2, 3)
        protocol = SimulationProtocol(
            initial_box=((2.0, 2.0), (-3.0, -3.0)),
            snapshot_times=(0.0, 0.1),
            trajectories=5000,
            substeps=1,
            sigma_meas=0.1,
        )
        dataset = simulate_ode(field, protocol)

        relative = dataset.y / dataset.x - 1.0
        np.testing.assert_allclose(relative.std(axis=0), 0.1, rtol=0.1)
        np.testing.assert_allclose(dataset.y.mean(axis=0), [2.0, -3.0], rtol=0.01)
        # x stays noise-free unless asked otherwise
        assert np.array_equal(dataset.x, np.tile([2.0, -3.0], (5000, 1)))

    def test_noisy_initial(self):
        field = PolynomialVectorField.zeros(1, 3)
        protocol = SimulationProtocol(
            initial_box=_constant(1.0),
            snapshot_times=(0.0, 0.1),
            trajectories=50,
            substeps=1,
            noisy_initial=True,
        )
        dataset = simulate_ode(field, protocol)
        assert not np.allclose(dataset.x, 1.0)
        assert not np.array_equal(dataset.x, dataset.y)

    def test_deterministic(self):
        system = builtin_system(VDP, seed=5)
        first = simulate(system.field, system.protocol)
        second = simulate(system.field, system.protocol)
        assert np.array_equal(first.x, second.x)
        assert np.array_equal(first.y, second.y)

        other = simulate(system.field, system.protocol.with_options({"seed": 6}))
        assert not np.array_equal(first.x, other.x)

    def test_batching_does_not_change_trajectories(self):
        system = builtin_system(VDP, seed=3)
        many = simulate(system.field, system.protocol)
        few = simulate(system.field, system.protocol.with_options({"trajectories": 4}))

        np.testing.assert_allclose(few.x, many.x[:8], rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(few.y, many.y[:8], rtol=1e-12, atol=1e-14)

    def test_rejects_process_noise(self):
        with pytest.raises(ConfigurationError):
            simulate_ode(PolynomialVectorField.zeros(1, 3), _protocol(sigma_proc=0.5))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            simulate(PolynomialVectorField.zeros(2, 3), _protocol(dim=3))


class TestDivergence:
    @staticmethod
    def _blow_up() -> PolynomialVectorField:
        # x(t) = x0 / (1 - x0 t)
        return PolynomialVectorField.from_terms(1, 3, {(1, (2,)): 1.0})

    def test_divergent_trajectories_are_excluded(self, caplog):
        protocol = _protocol(snapshot_times=(0.0, 2.0), trajectories=200)
        with caplog.at_level(logging.WARNING, logger="koopid.dynamics"):
            dataset = simulate(self._blow_up(), protocol)

        assert 50 < len(dataset) < 200
        assert np.all(np.isfinite(dataset.y))
        assert np.all(np.abs(dataset.y) <= 1e6)
        assert np.all(np.diff(dataset.trajectory_ids) > 0)
        assert "Excluding" in caplog.text

    def test_all_divergent(self):
        protocol = SimulationProtocol(
            initial_box=((1.0, 2.0),), snapshot_times=(0.0, 2.0), trajectories=5
        )
        with pytest.raises(DatasetError):
            simulate(self._blow_up(), protocol)


class TestSimulateSde:
    def test_brownian_variance(self):
        field = PolynomialVectorField.zeros(1, 3)
        protocol = SimulationProtocol(
            initial_box=_constant(0.0),
            snapshot_times=(0.0, 1.0),
            trajectories=10_000,
            substeps=10,
            sigma_meas=0.0,
            sigma_proc=1.0,
        )
        dataset = simulate_sde(field, protocol)
        assert dataset.y.var() == pytest.approx(1.0, rel=0.05)

    def test_zero_noise_matches_euler(self):
        system = builtin_system(VDP)
        protocol = system.protocol.with_options(
            {"trajectories": 3, "substeps": 10, "sigma_meas": 0.0}
        )
        dataset = simulate_sde(system.field, protocol)

        x = dataset.x[0::2]
        for _ in range(10):
            x = x + 0.05 * evaluate_field(system.field, x)
        np.testing.assert_allclose(dataset.y[0::2], x, rtol=0, atol=1e-12)

    def test_dispatch_on_process_noise(self):
        system = builtin_system(DUFFING_NOISE)
        protocol = system.protocol.with_options({"trajectories": 2})
        assert protocol.sigma_proc == 1.0

        noisy = simulate(system.field, protocol)
        still = simulate(system.field, protocol.with_options({"sigma_proc": 0.0}))
        assert len(noisy) == len(still) == 100
        assert np.array_equal(noisy.x[0], still.x[0])
        assert not np.allclose(noisy.y, still.y)


class TestInputs:
    def test_forced_duffing_records_the_held_input(self):
        system = builtin_system(DUFFING)
        dataset = simulate(system.field, system.protocol.with_options({"trajectories": 2}))

        assert dataset.input_dim == 1
        assert len(dataset) == 100
        assert dataset.sampling_period == pytest.approx(0.2)
        np.testing.assert_allclose(dataset.inputs[:, 0], np.cos(dataset.times))

    def test_signal_for_a_field_without_inputs(self):
        system = builtin_system(VDP)
        with pytest.raises(ConfigurationError):
            simulate(system.field, system.protocol.with_options({"input_signal": "cos"}))

    def test_field_with_inputs_needs_a_signal(self):
        system = builtin_system(DUFFING)
        with pytest.raises(ConfigurationError):
            simulate(system.field, system.protocol.with_options({"input_signal": None}))


class TestProtocol:
    @pytest.mark.parametrize(
        "times", [(0.0,), (0.0, 0.5, 1.2), (1.0, 0.0), (0.0, 0.0)]
    )
    def test_rejects_bad_snapshot_times(self, times):
        with pytest.raises(ConfigurationError):
            _protocol(snapshot_times=times)

    @pytest.mark.parametrize(
        "options",
        [
            {"trajectories": 0},
            {"substeps": 0},
            {"sigma_meas": -0.1},
            {"input_signal": "square"},
        ],
    )
    def test_rejects_bad_fields(self, options):
        with pytest.raises(ConfigurationError):
            _protocol(**options)

    def test_rejects_empty_interval(self):
        with pytest.raises(ConfigurationError):
            SimulationProtocol(initial_box=((1.0, -1.0),), snapshot_times=(0, 1), trajectories=1)

    def test_lorenz_linspace_is_evenly_spaced(self):
        protocol = builtin_system(LORENZ).protocol
        assert protocol.pairs_per_trajectory == 30
        assert protocol.sampling_period == pytest.approx(1.0 / 30.0)

    def test_with_options_keeps_other_fields(self):
        protocol = builtin_system(DUFFING_NOISE).protocol.with_options({"trajectories": "3"})
        assert protocol.trajectories == 3
        assert protocol.sigma_proc == 1.0
        assert len(protocol.snapshot_times) == 51

    @pytest.mark.parametrize("options", [{"input_signal": "square"}, {"horizon": 2}])
    def test_with_options_validates(self, options):
        with pytest.raises(ConfigurationError):
            builtin_system(VDP).protocol.with_options(options)

    def test_dict_form(self):
        protocol = builtin_system(DUFFING).protocol
        data = protocol.to_dict()
        assert data["initial_box"] == [[-1.0, 1.0], [-1.0, 1.0]]
        assert SimulationProtocol.from_dict(data) == protocol

    def test_malformed_dict(self):
        with pytest.raises(ConfigurationError):
            SimulationProtocol.from_dict({"initial_box": [[0, 1]]})


class TestBuiltinSystems:
    @pytest.mark.parametrize("name", SYSTEMS)
    def test_every_system_builds(self, name):
        system = builtin_system(name)
        assert system.name == name
        assert system.field.degree == 3
        assert system.protocol.dim == system.field.dim

    def test_protocols(self):
        assert builtin_system(VDP).protocol.snapshot_times == (0.0, 0.5, 1.0)
        assert builtin_system(VDP).protocol.trajectories == 10
        assert builtin_system(UNSTABLE).protocol.sampling_period == pytest.approx(0.1)
        assert builtin_system(UNSTABLE).protocol.trajectories == 20
        assert builtin_system(LORENZ).protocol.initial_box == ((-20.0, 20.0),) * 3
        assert builtin_system(DUFFING).protocol.input_signal == "cos"
        assert builtin_system(DUFFING).protocol.trajectories == 5
        assert builtin_system(DUFFING_NOISE).protocol.trajectories == 10
        assert builtin_system(NETWORK).protocol.trajectories == 500

    def test_unstable_coefficients(self):
        field = builtin_system(UNSTABLE).field
        assert field.coefficient(1, (1, 0)) == 3.0
        assert field.coefficient(1, (3, 0)) == 2.0
        assert field.coefficient(2, (0, 1)) == 4.0

    def test_unknown_system(self):
        with pytest.raises(UnknownSystemError, match="vdp-standard"):
            builtin_system("nosuch")

    def test_only_network_has_adjacency(self):
        assert builtin_system(VDP).adjacency is None
        assert builtin_system(NETWORK).adjacency.shape == (12, 12)


class TestRandomNetwork:
    def test_structure(self):
        network = random_network_system(seed=0)
        field = network.field
        assert field.dim == 12

        for j in range(1, 13):
            linear = [0] * 12
            linear[j - 1] = 1
            assert -1.0 <= field.coefficient(j, linear) <= 0.0

        degrees = field.basis.degrees
        support = np.any(field.coefficients != 0.0, axis=0)
        assert set(degrees[support]) <= {1, 2, 3}
        assert field.coefficients[:, 0].tolist() == [0.0] * 12

        interactions = field.coefficients[:, degrees >= 2]
        assert np.all(np.count_nonzero(interactions, axis=1) <= 3)

    def test_adjacency_matches_the_link_rule(self):
        network = random_network_system(seed=0)
        assert network.adjacency.any()
        assert np.array_equal(reconstruct_links(network.field, 1e-12), network.adjacency)

    def test_deterministic(self):
        first = random_network_system(seed=7)
        second = random_network_system(seed=7)
        other = random_network_system(seed=8)
        assert np.array_equal(first.field.coefficients, second.field.coefficients)
        assert np.array_equal(first.adjacency, second.adjacency)
        assert not np.array_equal(first.field.coefficients, other.field.coefficients)

    def test_network_seed_follows_builtin_seed(self):
        assert np.array_equal(
            builtin_system(NETWORK, seed=4).field.coefficients,
            random_network_system(seed=4).field.coefficients,
        )

    def test_builtin_network_keeps_every_trajectory(self):
        system = builtin_system(NETWORK, seed=0)
        protocol = system.protocol.with_options({"trajectories": 50, "sigma_meas": 0.0})
        dataset = simulate(system.field, protocol)
        assert len(dataset) == 100
        assert np.abs(dataset.y).max() < 10.0

    def test_unbounded_draws_are_redrawn(self, monkeypatch):
        # the first draw fails its screen, the second passes screen and full check
        verdicts = iter([False, True, True])
        monkeypatch.setattr(dynamics, "stays_bounded", lambda *args: next(verdicts))
        redrawn = random_network_system.__wrapped__(seed=3)

        monkeypatch.setattr(dynamics, "stays_bounded", lambda *args: True)
        first_draw = random_network_system.__wrapped__(seed=3)
        assert not np.array_equal(redrawn.field.coefficients, first_draw.field.coefficients)

    def test_gives_up_after_the_last_draw(self, monkeypatch):
        monkeypatch.setattr(dynamics, "NETWORK_ATTEMPTS", 2)
        monkeypatch.setattr(dynamics, "stays_bounded", lambda *args: False)
        with pytest.raises(DatasetError, match="after 2 draws"):
            random_network_system.__wrapped__(seed=3)


class TestStaysBounded:
    def test_decay_stays_inside(self):
        field = PolynomialVectorField.from_terms(1, 1, {(1, (1,)): -1.0})
        assert stays_bounded(field, np.array([[1.0], [-1.0], [0.5]]))

    def test_blow_up_leaves_the_bound(self):
        # x(t) = 1 / (1 - t) passes 3 at t = 2/3
        field = PolynomialVectorField.from_terms(1, 2, {(1, (2,)): 1.0})
        assert not stays_bounded(field, np.array([[0.0], [1.0]]))
        assert stays_bounded(field, np.array([[0.5]]))
