"""Option schemas for identification runs and simulation protocols."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Final

import voluptuous as vol

from .const import (
    DEFAULT_ESTIMATE_DIFFUSION,
    DEFAULT_INPUT_DIM,
    DEFAULT_M1,
    DEFAULT_M_F,
    DEFAULT_RCOND,
    DEFAULT_RESCALE,
    ESTIMATE_DIFFUSION,
    INPUT_DIM,
    INPUT_SIGNAL,
    INPUT_SIGNALS,
    M1,
    M_F,
    NOISY_INITIAL,
    RCOND,
    RESCALE,
    SEED,
    SIGMA_MEAS,
    SIGMA_PROC,
    SUBSTEPS,
    TRAJECTORIES,
)
from .error import ConfigurationError

_LOGGER: Final = logging.getLogger(__name__)

_POSITIVE_INT = vol.All(vol.Coerce(int), vol.Range(min=1))
_NON_NEGATIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0.0))

IDENTIFICATION_SCHEMA: Final = vol.Schema(
    {
        vol.Optional(M1, default=DEFAULT_M1): _POSITIVE_INT,
        vol.Optional(M_F, default=DEFAULT_M_F): _POSITIVE_INT,
        vol.Optional(RCOND, default=DEFAULT_RCOND): vol.Any(None, _NON_NEGATIVE_FLOAT),
        vol.Optional(ESTIMATE_DIFFUSION, default=DEFAULT_ESTIMATE_DIFFUSION): vol.Boolean(),
        vol.Optional(INPUT_DIM, default=DEFAULT_INPUT_DIM): vol.Any(
            None, vol.All(vol.Coerce(int), vol.Range(min=0))
        ),
        vol.Optional(RESCALE, default=DEFAULT_RESCALE): vol.Boolean(),
    }
)

# Overrides applied on top of a built-in or user protocol; absent keys keep their value
PROTOCOL_OPTIONS_SCHEMA: Final = vol.Schema(
    {
        vol.Optional(TRAJECTORIES): _POSITIVE_INT,
        vol.Optional(SUBSTEPS): _POSITIVE_INT,
        vol.Optional(SEED): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional(SIGMA_MEAS): _NON_NEGATIVE_FLOAT,
        vol.Optional(SIGMA_PROC): _NON_NEGATIVE_FLOAT,
        vol.Optional(INPUT_SIGNAL): vol.Any(None, vol.In(INPUT_SIGNALS)),
        vol.Optional(NOISY_INITIAL): vol.Boolean(),
    }
)


def validate(schema: vol.Schema, options: dict[str, Any]) -> dict[str, Any]:
    """Run a schema and turn voluptuous errors into ConfigurationError."""
    try:
        return schema(dict(options))
    except vol.Invalid as err:
        raise ConfigurationError(f"Invalid options: {err}") from err


@dataclass
class IdentificationConfig:
    """Parameters of one identification run.

    m2 = m1 + m_f - 1 is derived and never set independently.
    """

    m1: int = DEFAULT_M1
    m_f: int = DEFAULT_M_F
    rcond: float | None = DEFAULT_RCOND
    estimate_diffusion: bool = DEFAULT_ESTIMATE_DIFFUSION
    input_dim: int | None = DEFAULT_INPUT_DIM
    rescale: bool = DEFAULT_RESCALE

    def __post_init__(self) -> None:
        if self.m1 < 1 or self.m_f < 1:
            raise ConfigurationError(
                f"Expected m1 >= 1 and m_F >= 1, got m1={self.m1}, m_F={self.m_f}"
            )

    @property
    def m2(self) -> int:
        return self.m1 + self.m_f - 1

    @classmethod
    def from_options(cls, options: dict[str, Any]) -> IdentificationConfig:
        return cls(**validate(IDENTIFICATION_SCHEMA, options))

    def update_from_options(self, options: dict[str, Any]) -> None:
        """Update parameters in place; unknown keys are rejected."""
        _LOGGER.debug("Updating identification parameters from options: %s", options)

        known = {f.name for f in fields(self)}
        for key in options:
            if key not in known:
                raise ConfigurationError(f"Unknown option key: {key}")

        merged = validate(IDENTIFICATION_SCHEMA, {**asdict(self), **options})
        for key, value in merged.items():
            setattr(self, key, value)
        self.__post_init__()

    def to_dict(self) -> dict[str, Any]:
        return {**asdict(self), "m2": self.m2}
