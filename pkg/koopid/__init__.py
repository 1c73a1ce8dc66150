"""Identification of polynomial vector fields through the Koopman generator."""

from __future__ import annotations

__version__ = "0.0.1"

from .basis import MonomialBasis, basis_size, build_basis, index_of, lift
from .config import IdentificationConfig
from .dynamics import (
    SimulationProtocol,
    builtin_system,
    evaluate_field,
    random_network_system,
    simulate,
    simulate_ode,
    simulate_sde,
)
from .edmd import SnapshotDataset, estimate_generator, fit_koopman
from .error import KoopidError
from .identify import IdentificationResult, PolynomialVectorField, identify
from .metrics import coefficient_error, link_score, reconstruct_links

__all__ = [
    "IdentificationConfig",
    "IdentificationResult",
    "KoopidError",
    "MonomialBasis",
    "PolynomialVectorField",
    "SimulationProtocol",
    "SnapshotDataset",
    "__version__",
    "basis_size",
    "build_basis",
    "builtin_system",
    "coefficient_error",
    "estimate_generator",
    "evaluate_field",
    "fit_koopman",
    "identify",
    "index_of",
    "lift",
    "link_score",
    "random_network_system",
    "reconstruct_links",
    "simulate",
    "simulate_ode",
    "simulate_sde",
]
