"""Synthetic snapshot data from polynomial ODEs and SDEs.

Each trajectory draws from its own Philox stream keyed by (seed, trajectory
index), in a fixed order: initial condition, process-noise increments,
measurement noise on y, measurement noise on x. Datasets therefore do not
depend on how trajectories are batched.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Any, Callable, Final, Mapping

import numpy as np

from .basis import build_basis, index_of
from .config import PROTOCOL_OPTIONS_SCHEMA, validate
from .const import (
    DEFAULT_NOISY_INITIAL,
    DEFAULT_SEED,
    DEFAULT_SIGMA_MEAS,
    DEFAULT_SIGMA_PROC,
    DEFAULT_SUBSTEPS,
    DIVERGENCE_GUARD,
    INPUT_SIGNALS,
    NETWORK_ATTEMPTS,
    NETWORK_BOUND,
    NETWORK_DIM,
    NETWORK_HORIZON,
    NETWORK_PROBES,
    NETWORK_TERMS,
    SAMPLING_TOLERANCE,
)
from .edmd import SnapshotDataset
from .error import ConfigurationError, DatasetError, DimensionMismatchError, UnknownSystemError
from .identify import PolynomialVectorField
from .integrator import Integrator, RightHandSide
from .integrator.euler_maruyama import EulerMaruyamaIntegrator
from .integrator.rk4 import RungeKuttaIntegrator

_LOGGER: Final = logging.getLogger(__name__)

VDP = "vdp"
VDP_STANDARD = "vdp-standard"
UNSTABLE = "unstable"
LORENZ = "lorenz"
DUFFING = "duffing"
DUFFING_NOISE = "duffing-noise"
NETWORK = "network"

SYSTEMS: Final = (VDP, VDP_STANDARD, UNSTABLE, LORENZ, DUFFING, DUFFING_NOISE, NETWORK)

# Degree of every built-in field, matching the default m_F
BUILTIN_DEGREE = 3

_SIGNALS: Final[dict[str, Callable[[float], float]]] = {
    "cos": np.cos,
    "sin": np.sin,
    "zero": lambda t: 0.0,
}


@dataclass(frozen=True)
class SimulationProtocol:
    """How trajectories are started, sampled and perturbed."""

    # (low, high) per state dimension, initial conditions are uniform on the box
    initial_box: tuple[tuple[float, float], ...]
    snapshot_times: tuple[float, ...]
    trajectories: int
    substeps: int = DEFAULT_SUBSTEPS
    seed: int = DEFAULT_SEED
    sigma_meas: float = DEFAULT_SIGMA_MEAS
    sigma_proc: float = DEFAULT_SIGMA_PROC
    input_signal: str | None = None
    noisy_initial: bool = DEFAULT_NOISY_INITIAL

    def __post_init__(self) -> None:
        box = tuple((float(low), float(high)) for low, high in self.initial_box)
        times = tuple(float(t) for t in self.snapshot_times)
        object.__setattr__(self, "initial_box", box)
        object.__setattr__(self, "snapshot_times", times)

        if not box:
            raise ConfigurationError("Initial box has no dimensions")
        if any(low > high for low, high in box):
            raise ConfigurationError(f"Initial box {box} has an empty interval")
        if len(times) < 2:
            raise ConfigurationError("At least two snapshot times are needed")

        spacing = np.diff(times)
        if np.any(spacing <= 0):
            raise ConfigurationError(f"Snapshot times {times} are not increasing")
        if np.ptp(spacing) > SAMPLING_TOLERANCE * spacing.max():
            raise ConfigurationError(f"Snapshot times {times} are not evenly spaced")

        if self.trajectories < 1:
            raise ConfigurationError(f"Expected at least one trajectory, got {self.trajectories}")
        if self.substeps < 1:
            raise ConfigurationError(f"Expected at least one substep, got {self.substeps}")
        if self.sigma_meas < 0 or self.sigma_proc < 0:
            raise ConfigurationError("Noise levels must be nonnegative")
        if self.input_signal is not None and self.input_signal not in INPUT_SIGNALS:
            raise ConfigurationError(
                f"Unknown input signal {self.input_signal!r}, "
                f"choose one of: {', '.join(INPUT_SIGNALS)}"
            )

    @property
    def dim(self) -> int:
        return len(self.initial_box)

    @property
    def sampling_period(self) -> float:
        return self.snapshot_times[1] - self.snapshot_times[0]

    @property
    def pairs_per_trajectory(self) -> int:
        return len(self.snapshot_times) - 1

    def stream(self, index: int) -> np.random.Generator:
        """Counter-based random stream of trajectory `index`."""
        return np.random.Generator(
            np.random.Philox(np.random.SeedSequence([self.seed, index]))
        )

    def with_options(self, options: Mapping[str, Any]) -> SimulationProtocol:
        """Protocol with validated overrides; absent keys are kept."""
        return replace(self, **validate(PROTOCOL_OPTIONS_SCHEMA, dict(options)))

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["initial_box"] = [list(interval) for interval in self.initial_box]
        data["snapshot_times"] = list(self.snapshot_times)
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SimulationProtocol:
        try:
            return cls(**data)
        except TypeError as err:
            raise ConfigurationError(f"Malformed protocol: {err}") from err


@dataclass(frozen=True, eq=False)
class NetworkSystem:
    field: PolynomialVectorField
    # (j, l) is True iff there is a directed link x_l -> x_j
    adjacency: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class BuiltinSystem:
    name: str
    field: PolynomialVectorField
    protocol: SimulationProtocol
    adjacency: np.ndarray | None = field(default=None, repr=False)


def evaluate_field(
    vector_field: PolynomialVectorField, x: np.ndarray, u: np.ndarray | None = None
) -> np.ndarray:
    """F(x, u) for a single state or a K x n batch.

    Only monomials with a nonzero coefficient in some equation are evaluated.
    """
    points = np.asarray(x, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.shape[1] != vector_field.dim:
        raise DimensionMismatchError(
            f"State has {points.shape[1]} components, field has {vector_field.dim}"
        )

    if vector_field.input_dim:
        if u is None:
            raise DimensionMismatchError(
                f"Field has {vector_field.input_dim} input(s) but no input was given"
            )
        inputs = np.asarray(u, dtype=float).reshape(-1, vector_field.input_dim)
        inputs = np.broadcast_to(inputs, (points.shape[0], vector_field.input_dim))
        points = np.hstack([points, inputs])

    coefficients = vector_field.coefficients
    support = np.flatnonzero(np.any(coefficients != 0.0, axis=0))
    if support.size == 0:
        values = np.zeros((points.shape[0], vector_field.dim))
    else:
        exponents = vector_field.basis.exponents[support]
        monomials = np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)
        values = monomials @ coefficients[:, support].T

    return values[0] if single else values


def _right_hand_side(
    vector_field: PolynomialVectorField, protocol: SimulationProtocol
) -> RightHandSide:
    if not vector_field.input_dim:
        if protocol.input_signal not in (None, "zero"):
            raise ConfigurationError(
                f"Input signal {protocol.input_signal!r} given for a field without inputs"
            )
        return lambda t, x: evaluate_field(vector_field, x)

    if protocol.input_signal is None:
        raise ConfigurationError(
            f"Field has {vector_field.input_dim} input(s); set an input signal"
        )
    signal = _SIGNALS[protocol.input_signal]
    return lambda t, x: evaluate_field(vector_field, x, np.full(vector_field.input_dim, signal(t)))


def _draw(
    protocol: SimulationProtocol, dim: int, stochastic: bool
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray, np.ndarray | None]:
    """Per-trajectory random draws stacked over trajectories."""
    lows = np.array([low for low, _ in protocol.initial_box])
    highs = np.array([high for _, high in protocol.initial_box])
    segments = protocol.pairs_per_trajectory

    initial, increments, noise_y, noise_x = [], [], [], []
    for index in range(protocol.trajectories):
        rng = protocol.stream(index)
        initial.append(rng.uniform(lows, highs))
        if stochastic:
            increments.append(rng.standard_normal((segments, protocol.substeps, dim)))
        noise_y.append(rng.standard_normal((segments, dim)))
        if protocol.noisy_initial:
            noise_x.append(rng.standard_normal((segments, dim)))

    return (
        np.array(initial),
        np.array(increments) if stochastic else None,
        np.array(noise_y),
        np.array(noise_x) if protocol.noisy_initial else None,
    )


def _simulate(
    vector_field: PolynomialVectorField,
    protocol: SimulationProtocol,
    integrator: Integrator,
) -> SnapshotDataset:
    if protocol.dim != vector_field.dim:
        raise DimensionMismatchError(
            f"Protocol box has {protocol.dim} dimensions, field has {vector_field.dim}"
        )

    rhs = _right_hand_side(vector_field, protocol)
    initial, increments, noise_y, noise_x = _draw(
        protocol, vector_field.dim, integrator.stochastic
    )

    times = np.array(protocol.snapshot_times)
    segments = protocol.pairs_per_trajectory
    count = protocol.trajectories
    states = np.empty((segments + 1, count, vector_field.dim))
    states[0] = initial
    divergent = np.zeros(count, dtype=bool)

    with np.errstate(over="ignore", invalid="ignore"):
        x = initial
        for segment in range(segments):
            segment_increments = None
            if increments is not None:
                # (K, substeps, n) -> (substeps, K, n)
                segment_increments = np.swapaxes(increments[:, segment], 0, 1)
            x = integrator.advance(
                rhs, times[segment], x, times[segment + 1] - times[segment], segment_increments
            )
            divergent |= ~np.all(np.isfinite(x), axis=1) | np.any(
                np.abs(x) > DIVERGENCE_GUARD, axis=1
            )
            x = np.where(divergent[:, None], 0.0, x)
            states[segment + 1] = x

    if divergent.any():
        _LOGGER.warning(
            "Excluding %d of %d trajectories that left |x| <= %g",
            int(divergent.sum()),
            count,
            DIVERGENCE_GUARD,
        )
    kept = np.flatnonzero(~divergent)
    if kept.size == 0:
        raise DatasetError(f"All {count} trajectories diverged")

    # (segments, K, n) -> trajectory-major rows
    x_true = np.swapaxes(states[:-1], 0, 1)[kept]
    y_true = np.swapaxes(states[1:], 0, 1)[kept]
    y = y_true * (1.0 + protocol.sigma_meas * noise_y[kept])
    x_obs = x_true
    if noise_x is not None:
        x_obs = x_true * (1.0 + protocol.sigma_meas * noise_x[kept])

    dim = vector_field.dim
    start_times = np.tile(times[:-1], kept.size)
    inputs = None
    if vector_field.input_dim:
        signal = _SIGNALS[protocol.input_signal]
        inputs = np.repeat(
            np.array([signal(t) for t in start_times]).reshape(-1, 1),
            vector_field.input_dim,
            axis=1,
        )

    _LOGGER.debug(
        "Simulated %d trajectories x %d pairs with %s",
        kept.size,
        segments,
        type(integrator).__name__,
    )

    return SnapshotDataset(
        x=x_obs.reshape(-1, dim),
        y=y.reshape(-1, dim),
        sampling_period=protocol.sampling_period,
        inputs=inputs,
        trajectory_ids=np.repeat(kept, segments),
        times=start_times,
    )


def simulate_ode(
    vector_field: PolynomialVectorField, protocol: SimulationProtocol
) -> SnapshotDataset:
    """RK4 trajectories with multiplicative measurement noise y = phi(x)(1 + v)."""
    if protocol.sigma_proc > 0:
        raise ConfigurationError(
            f"sigma_proc={protocol.sigma_proc} needs simulate_sde, not simulate_ode"
        )
    return _simulate(vector_field, protocol, RungeKuttaIntegrator(protocol.substeps))


def simulate_sde(
    vector_field: PolynomialVectorField, protocol: SimulationProtocol
) -> SnapshotDataset:
    """Euler-Maruyama trajectories with additive isotropic process noise."""
    return _simulate(
        vector_field,
        protocol,
        EulerMaruyamaIntegrator(protocol.substeps, protocol.sigma_proc),
    )


def simulate(
    vector_field: PolynomialVectorField, protocol: SimulationProtocol
) -> SnapshotDataset:
    if protocol.sigma_proc > 0:
        return simulate_sde(vector_field, protocol)
    return simulate_ode(vector_field, protocol)


def _box(bound: float, dim: int) -> tuple[tuple[float, float], ...]:
    return tuple((-bound, bound) for _ in range(dim))


def _van_der_pol(standard: bool) -> PolynomialVectorField:
    terms = {
        (1, (0, 1)): 1.0,
        (2, (0, 1)): 1.0,
        (2, (2, 1)): -1.0,
    }
    if standard:
        terms[(2, (1, 0))] = -1.0
    else:
        # (1 - x_1^2) x_2 - x_2 leaves no linear x_2 term
        terms[(2, (0, 1))] -= 1.0
    return PolynomialVectorField.from_terms(2, BUILTIN_DEGREE, terms)


def _unstable() -> PolynomialVectorField:
    return PolynomialVectorField.from_terms(
        2,
        BUILTIN_DEGREE,
        {
            (1, (1, 0)): 3.0,
            (1, (0, 1)): 0.5,
            (1, (1, 1)): -1.0,
            (1, (0, 2)): 1.0,
            (1, (3, 0)): 2.0,
            (2, (1, 0)): 0.5,
            (2, (0, 1)): 4.0,
        },
    )


def _lorenz() -> PolynomialVectorField:
    return PolynomialVectorField.from_terms(
        3,
        BUILTIN_DEGREE,
        {
            (1, (0, 1, 0)): 10.0,
            (1, (1, 0, 0)): -10.0,
            (2, (1, 0, 0)): 28.0,
            (2, (1, 0, 1)): -1.0,
            (2, (0, 1, 0)): -1.0,
            (3, (1, 1, 0)): 1.0,
            (3, (0, 0, 1)): -8.0 / 3.0,
        },
    )


def _duffing(forced: bool) -> PolynomialVectorField:
    if not forced:
        return PolynomialVectorField.from_terms(
            2,
            BUILTIN_DEGREE,
            {
                (1, (0, 1)): 1.0,
                (2, (1, 0)): 1.0,
                (2, (3, 0)): -1.0,
                (2, (0, 1)): -0.2,
            },
        )
    # Variables are (x_1, x_2, u)
    return PolynomialVectorField.from_terms(
        2,
        BUILTIN_DEGREE,
        {
            (1, (0, 1, 0)): 1.0,
            (2, (1, 0, 0)): 1.0,
            (2, (3, 0, 0)): -1.0,
            (2, (0, 1, 0)): -0.2,
            (2, (2, 0, 1)): 0.2,
        },
        input_dim=1,
    )


def _draw_network(rng: np.random.Generator, dim: int, terms: int) -> NetworkSystem:
    exponent_pairs = [(a, b) for a in range(4) for b in range(4) if a + b in (2, 3)]

    basis = build_basis(dim, BUILTIN_DEGREE)
    coefficients = np.zeros((dim, basis.size))
    adjacency = np.zeros((dim, dim), dtype=bool)

    decay = rng.uniform(0.0, 1.0, dim)
    for j in range(dim):
        linear = [0] * dim
        linear[j] = 1
        coefficients[j, index_of(basis, linear) - 1] -= decay[j]

        for _ in range(terms):
            weight = rng.normal(0.0, 1.0)
            states = rng.integers(0, dim, size=2)
            powers = exponent_pairs[rng.integers(len(exponent_pairs))]

            exponents = [0] * dim
            for state, power in zip(states, powers):
                exponents[state] += power
                if power:
                    adjacency[j, state] = True
            coefficients[j, index_of(basis, exponents) - 1] += weight

    adjacency.setflags(write=False)
    return NetworkSystem(
        field=PolynomialVectorField(dim=dim, degree=BUILTIN_DEGREE, coefficients=coefficients),
        adjacency=adjacency,
    )


def stays_bounded(
    vector_field: PolynomialVectorField,
    initial: np.ndarray,
    horizon: float = NETWORK_HORIZON,
    bound: float = NETWORK_BOUND,
    checks: int = 10,
) -> bool:
    """True iff every trajectory from `initial` keeps |x_j| <= bound up to `horizon`.

    Stops at the first check where some state has left the bound.
    """
    integrator = RungeKuttaIntegrator(DEFAULT_SUBSTEPS // checks)

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        return evaluate_field(vector_field, x)

    x = np.asarray(initial, dtype=float)
    interval = horizon / checks
    with np.errstate(over="ignore", invalid="ignore"):
        for check in range(checks):
            x = integrator.advance(rhs, check * interval, x, interval)
            if not np.all(np.abs(x) <= bound):
                return False
    return True


@lru_cache(maxsize=8)
def random_network_system(
    seed: int = DEFAULT_SEED, dim: int = NETWORK_DIM, terms: int = NETWORK_TERMS
) -> NetworkSystem:
    """dx_j/dt = -xi_j x_j + sum_k zeta_jk x_a^s_a x_b^s_b.

    xi_j ~ U[0, 1], zeta_jk ~ N(0, 1), a and b uniform over the states and
    (s_a, s_b) uniform over the exponent pairs in {0..3}^2 with s_a + s_b in
    {2, 3}. Coincident monomials are summed. There is a link x_l -> x_j iff l
    appears in some term of equation j with a nonzero exponent; the linear
    -xi_j x_j term is not a link.

    A draw is kept only if probe trajectories started uniformly on
    [-1, 1]^dim, drawn from the same stream, stay within |x_j| <= 3 up to
    t = 1. Otherwise the structure is redrawn. Results are cached.
    """
    rng = np.random.default_rng(seed)
    for attempt in range(1, NETWORK_ATTEMPTS + 1):
        network = _draw_network(rng, dim, terms)
        probes = rng.uniform(-1.0, 1.0, (NETWORK_PROBES, dim))
        # screen on a tenth of the probes first
        screen = probes[: NETWORK_PROBES // 10]
        if stays_bounded(network.field, screen) and stays_bounded(network.field, probes):
            _LOGGER.debug(
                "Generated %d-node network with seed %d and %d links after %d draw(s)",
                dim,
                seed,
                int(network.adjacency.sum()),
                attempt,
            )
            return network

    raise DatasetError(
        f"No {dim}-node network with seed {seed} stayed within |x| <= {NETWORK_BOUND} "
        f"after {NETWORK_ATTEMPTS} draws"
    )


def builtin_system(name: str, seed: int = DEFAULT_SEED) -> BuiltinSystem:
    """Named benchmark system with its default protocol.

    `seed` seeds the protocol and, for the network, the random structure.
    """
    if name in (VDP, VDP_STANDARD):
        return BuiltinSystem(
            name=name,
            field=_van_der_pol(standard=name == VDP_STANDARD),
            protocol=SimulationProtocol(
                initial_box=_box(1.0, 2),
                snapshot_times=(0.0, 0.5, 1.0),
                trajectories=10,
                seed=seed,
            ),
        )
    if name == UNSTABLE:
        return BuiltinSystem(
            name=name,
            field=_unstable(),
            protocol=SimulationProtocol(
                initial_box=_box(1.0, 2),
                snapshot_times=(0.0, 0.1),
                trajectories=20,
                seed=seed,
            ),
        )
    if name == LORENZ:
        return BuiltinSystem(
            name=name,
            field=_lorenz(),
            protocol=SimulationProtocol(
                initial_box=_box(20.0, 3),
                snapshot_times=tuple(np.linspace(0.0, 1.0, 31)),
                trajectories=10,
                seed=seed,
            ),
        )
    if name in (DUFFING, DUFFING_NOISE):
        forced = name == DUFFING
        return BuiltinSystem(
            name=name,
            field=_duffing(forced),
            protocol=SimulationProtocol(
                initial_box=_box(1.0, 2),
                snapshot_times=tuple(np.linspace(0.0, 10.0, 51)),
                trajectories=5 if forced else 10,
                seed=seed,
                sigma_proc=0.0 if forced else 1.0,
                input_signal="cos" if forced else None,
            ),
        )
    if name == NETWORK:
        network = random_network_system(seed)
        return BuiltinSystem(
            name=name,
            field=network.field,
            protocol=SimulationProtocol(
                initial_box=_box(1.0, NETWORK_DIM),
                snapshot_times=(0.0, 0.5, 1.0),
                trajectories=500,
                seed=seed,
            ),
            adjacency=network.adjacency,
        )
    raise UnknownSystemError(name, SYSTEMS)
