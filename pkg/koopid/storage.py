"""Reading and writing datasets, fields and run manifests.

All writes go to a temporary file in the target directory first and are
moved into place with os.replace, so a reader never sees a partial file.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Final, Mapping

import numpy as np
import pandas as pd

from .const import (
    DATASET_CSV,
    DATASET_SIDECAR,
    LAYOUT_PAIRS,
    LAYOUT_TRAJECTORIES,
    MANIFEST_FILE,
    TIME_TOLERANCE,
)
from .edmd import SnapshotDataset
from .error import ConfigurationError, DatasetError
from .identify import PolynomialVectorField

_LOGGER: Final = logging.getLogger(__name__)

TRAJECTORY_COLUMN = "traj_id"
TIME_COLUMN = "t"


def atomic_write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(descriptor, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    _LOGGER.debug("Wrote %s", path)
    return path


def write_json(path: Path, data: Any) -> Path:
    return atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"{path} is not valid JSON: {err}") from err


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    return atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g"))


def _column_names(dim: int, input_dim: int) -> tuple[list[str], list[str]]:
    return [f"x_{i + 1}" for i in range(dim)], [f"u_{i + 1}" for i in range(input_dim)]


def dataset_frame(dataset: SnapshotDataset) -> pd.DataFrame:
    """Pairs layout: row 2i holds x_i, row 2i + 1 holds y_i, both with u_i."""
    states, inputs = _column_names(dataset.dim, dataset.input_dim)
    count = len(dataset)

    ids = dataset.trajectory_ids if dataset.trajectory_ids is not None else np.arange(count)
    start = dataset.times if dataset.times is not None else np.zeros(count)
    interleaved = np.empty((2 * count, dataset.dim))
    interleaved[0::2] = dataset.x
    interleaved[1::2] = dataset.y

    frame = pd.DataFrame(interleaved, columns=states)
    frame.insert(0, TIME_COLUMN, np.column_stack([start, start + dataset.sampling_period]).ravel())
    frame.insert(0, TRAJECTORY_COLUMN, np.repeat(ids, 2))
    if dataset.inputs is not None:
        repeated = np.repeat(dataset.inputs, 2, axis=0)
        for column, name in enumerate(inputs):
            frame[name] = repeated[:, column]
    return frame


def write_dataset(
    directory: Path,
    dataset: SnapshotDataset,
    *,
    seed: int | None = None,
    protocol: Mapping[str, Any] | None = None,
    csv_name: str = DATASET_CSV,
) -> list[Path]:
    """Write the CSV and its JSON sidecar; returns both paths."""
    directory = Path(directory)
    csv_path = write_csv(directory / csv_name, dataset_frame(dataset))
    sidecar = write_json(
        directory / DATASET_SIDECAR,
        {
            "T_s": dataset.sampling_period,
            "dim": dataset.dim,
            "input_dim": dataset.input_dim,
            "seed": seed,
            "protocol": dict(protocol) if protocol is not None else None,
            "layout": LAYOUT_PAIRS,
        },
    )
    return [csv_path, sidecar]


def _pairs_from_rows(frame: pd.DataFrame, states: list[str], inputs: list[str]) -> dict:
    if len(frame) % 2:
        raise DatasetError(f"Pairs layout needs an even number of rows, got {len(frame)}")
    values = frame[states].to_numpy(dtype=float)
    return {
        "x": values[0::2],
        "y": values[1::2],
        "inputs": frame[inputs].to_numpy(dtype=float)[0::2] if inputs else None,
        "trajectory_ids": frame[TRAJECTORY_COLUMN].to_numpy()[0::2],
        "times": frame[TIME_COLUMN].to_numpy(dtype=float)[0::2],
    }


def _pairs_from_trajectories(
    frame: pd.DataFrame, states: list[str], inputs: list[str], sampling_period: float
) -> dict:
    """Chain consecutive samples of each trajectory; other gaps are rejected."""
    x, y, u, ids, times = [], [], [], [], []
    for trajectory, group in frame.groupby(TRAJECTORY_COLUMN, sort=True):
        group = group.sort_values(TIME_COLUMN, kind="stable")
        t = group[TIME_COLUMN].to_numpy(dtype=float)
        gaps = np.diff(t)
        if not np.allclose(gaps, sampling_period, rtol=TIME_TOLERANCE, atol=0.0):
            raise DatasetError(
                f"Trajectory {trajectory} has samples not spaced by T_s={sampling_period}"
            )
        values = group[states].to_numpy(dtype=float)
        x.append(values[:-1])
        y.append(values[1:])
        if inputs:
            u.append(group[inputs].to_numpy(dtype=float)[:-1])
        ids.append(np.full(len(values) - 1, trajectory))
        times.append(t[:-1])

    if not x:
        raise DatasetError("Dataset has no rows")
    return {
        "x": np.vstack(x),
        "y": np.vstack(y),
        "inputs": np.vstack(u) if inputs else None,
        "trajectory_ids": np.concatenate(ids),
        "times": np.concatenate(times),
    }


def read_dataset(csv_path: Path, sidecar_path: Path | None = None) -> SnapshotDataset:
    """Read a dataset written by `write_dataset` or chained trajectory samples."""
    csv_path = Path(csv_path)
    sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.parent / DATASET_SIDECAR
    sidecar = read_json(sidecar_path)

    try:
        sampling_period = float(sidecar["T_s"])
        dim = int(sidecar["dim"])
        input_dim = int(sidecar.get("input_dim", 0))
        layout = sidecar.get("layout", LAYOUT_PAIRS)
    except (KeyError, TypeError, ValueError) as err:
        raise DatasetError(f"Malformed dataset sidecar {sidecar_path}: {err}") from err

    try:
        frame = pd.read_csv(csv_path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
        raise DatasetError(f"Cannot parse {csv_path}: {err}") from err

    states, inputs = _column_names(dim, input_dim)
    missing = [c for c in [TRAJECTORY_COLUMN, TIME_COLUMN, *states, *inputs] if c not in frame]
    if missing:
        raise DatasetError(f"{csv_path} lacks column(s): {', '.join(missing)}")
    non_numeric = [
        c for c in [TIME_COLUMN, *states, *inputs] if not pd.api.types.is_numeric_dtype(frame[c])
    ]
    if non_numeric:
        raise DatasetError(f"{csv_path} has non-numeric column(s): {', '.join(non_numeric)}")

    if layout == LAYOUT_PAIRS:
        columns = _pairs_from_rows(frame, states, inputs)
    elif layout == LAYOUT_TRAJECTORIES:
        columns = _pairs_from_trajectories(frame, states, inputs, sampling_period)
    else:
        raise DatasetError(
            f"Unknown layout {layout!r}, expected {LAYOUT_PAIRS!r} or {LAYOUT_TRAJECTORIES!r}"
        )

    _LOGGER.debug("Read %d snapshot pairs from %s", len(columns["x"]), csv_path)
    return SnapshotDataset(sampling_period=sampling_period, **columns)


def write_field(
    path: Path,
    vector_field: PolynomialVectorField,
    extra: Mapping[str, Any] | None = None,
) -> Path:
    return write_json(path, {**vector_field.to_dict(), **(extra or {})})


def read_field(path: Path) -> tuple[PolynomialVectorField, np.ndarray | None]:
    """Field from a truth or result file, plus its adjacency when recorded."""
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} does not hold a vector field")
    adjacency = data.get("adjacency")
    return (
        PolynomialVectorField.from_dict(data),
        None if adjacency is None else np.asarray(adjacency, dtype=bool),
    )


@dataclass
class RunManifest:
    """What a command did: enough to rerun it and to find what it wrote."""

    command: str
    config: dict[str, Any]
    seed: int | None
    version: str
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    # Wall-clock seconds
    duration: float = 0.0

    def add_outputs(self, paths: list[Path]) -> None:
        self.outputs.extend(str(path) for path in paths)

    def write(self, directory: Path) -> Path:
        path = Path(directory) / MANIFEST_FILE
        self.outputs.append(str(path))
        return write_json(path, asdict(self))
