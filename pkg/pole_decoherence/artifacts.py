"""CSV and JSON artifacts: column schemas, writers and readers.

Every numeric table is written with 17 significant digits so that reading a
file back reproduces the values bit for bit.
"""

from __future__ import annotations

import json
import logging
from typing import TYPE_CHECKING, Any, Union

import numpy as np
import pandas as pd

from pole_decoherence.utils.exceptions import GridMismatchError

if TYPE_CHECKING:
    from collections.abc import Sequence
    from pathlib import Path

    from pole_decoherence.preferred_basis import BasisTrajectory, FidelityRecord

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
POLES_COLUMNS = ("n", "re_z", "im_z", "gamma_n")
DIAGONALITY_COLUMNS = ("time", "offdiagonal_mass", "truncation_bound")
FIDELITY_COLUMNS = ("time", "fidelity", "subspace_overlap", "flags")
TRAJECTORY_SUFFIX = (
    "offdiag_factor",
    "coherence_ratio",
    "trace_distance",
    "trace_distance_closed_form",
    "compensation",
)
BASIS_PREFIX = ("time", "index", "track", "eigenvalue", "degenerate")


def entry_columns(dim: int) -> list[str]:
    """rho_m_n_re, rho_m_n_im for the leading dim × dim block, row-major."""
    return [
        f"rho_{m}_{n}_{part}"
        for m in range(dim)
        for n in range(dim)
        for part in ("re", "im")
    ]


def trajectory_columns(dim: int) -> list[str]:
    """Columns of trajectory.csv."""
    return ["time", *entry_columns(dim), *TRAJECTORY_SUFFIX]


def vector_columns(dim: int) -> list[str]:
    """Interleaved v_k_re, v_k_im for k < dim."""
    return [f"v_{k}_{part}" for k in range(dim) for part in ("re", "im")]


def basis_columns(dim: int) -> list[str]:
    """Columns of basis.csv."""
    return [*BASIS_PREFIX, *vector_columns(dim)]


def write_table(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write a table as CSV with full precision."""
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="nan")
    logger.info("wrote %s (%d rows)", path, len(table))
    return path


def read_table(
    path: Union[str, Path],
    columns: Sequence[str] = (),
) -> pd.DataFrame:
    """Read a CSV artifact and check its leading columns.

    :raises ValueError: If the columns do not match the schema.
    """
    table = pd.read_csv(
        path,
        keep_default_na=False,
        na_values=["nan", "NaN"],
        float_precision="round_trip",
    )
    if columns and list(table.columns[: len(columns)]) != list(columns):
        msg = f"{path}: expected columns {list(columns)}, got {list(table.columns)}"
        raise ValueError(msg)
    return table


def trajectory_row(
    time: float,
    density: np.ndarray,
    dim: int,
    diagnostics: Sequence[float],
) -> list[float]:
    """One trajectory row from the leading block of a density matrix."""
    block = np.asarray(density)[:dim, :dim]
    parts = np.column_stack([block.real.ravel(), block.imag.ravel()]).ravel()
    return [float(time), *parts.tolist(), *(float(value) for value in diagnostics)]


def trajectory_table(rows: Sequence[Sequence[float]], dim: int) -> pd.DataFrame:
    """Assemble trajectory rows into a table."""
    return pd.DataFrame(list(rows), columns=trajectory_columns(dim))


def read_trajectory(path: Union[str, Path]) -> pd.DataFrame:
    """Read trajectory.csv."""
    table = read_table(path, ("time",))
    suffix = list(table.columns[-len(TRAJECTORY_SUFFIX) :])
    if suffix != list(TRAJECTORY_SUFFIX):
        msg = f"{path}: trajectory columns end with {suffix}"
        raise ValueError(msg)
    return table


def trajectory_block(table: pd.DataFrame, row: int) -> np.ndarray:
    """The complex density block stored in one trajectory row."""
    entries = [column for column in table.columns if column.startswith("rho_")]
    dim = int(round(np.sqrt(len(entries) / 2)))
    values = table.loc[row, entries].to_numpy(dtype=float)
    return (values[0::2] + 1j * values[1::2]).reshape(dim, dim)


def basis_table(
    traj: BasisTrajectory,
    times: np.ndarray,
    count: int,
) -> pd.DataFrame:
    """One row per (time, eigen-index) for the ``count`` leading eigenvectors.

    ``times`` are the reported times matching ``traj.times``.
    """
    if len(times) != len(traj.times):
        raise GridMismatchError
    count = min(count, traj.space.dim)
    rows = []
    for k, time in enumerate(times):
        vectors = traj.basis(k)
        for index in range(count):
            vector = vectors[:, index]
            parts = np.column_stack([vector.real, vector.imag]).ravel()
            rows.append(
                [
                    float(time),
                    index,
                    int(traj.tracks[k, index]),
                    float(traj.eigenvalues[k, index]),
                    int(traj.degenerate[k, index]),
                    *parts.tolist(),
                ],
            )
    return pd.DataFrame(rows, columns=basis_columns(traj.space.dim))


def read_basis(path: Union[str, Path]) -> pd.DataFrame:
    """Read basis.csv."""
    return read_table(path, BASIS_PREFIX)


def basis_vectors(table: pd.DataFrame, time_index: int) -> np.ndarray:
    """Eigenvectors stored for the ``time_index``-th time, as columns."""
    times = table["time"].unique()
    rows = table[table["time"] == times[time_index]].sort_values("index")
    values = rows[[column for column in table.columns if column.startswith("v_")]]
    values = values.to_numpy(dtype=float)
    return (values[:, 0::2] + 1j * values[:, 1::2]).T


def diagonality_table(
    times: np.ndarray,
    masses: np.ndarray,
    bounds: np.ndarray,
) -> pd.DataFrame:
    """Table of diagonality.csv."""
    return pd.DataFrame(
        {
            "time": np.asarray(times, dtype=float),
            "offdiagonal_mass": np.asarray(masses, dtype=float),
            "truncation_bound": np.asarray(bounds, dtype=float),
        },
    )


def fidelity_table(
    records: Sequence[FidelityRecord],
    times: np.ndarray,
) -> pd.DataFrame:
    """Table of fidelity.csv; ``times`` are the reported times."""
    return pd.DataFrame(
        {
            "time": np.asarray(times, dtype=float),
            "fidelity": [record.fidelity for record in records],
            "subspace_overlap": [record.subspace_overlap for record in records],
            "flags": ["|".join(record.flags) for record in records],
        },
    )


def _plain(value: Any) -> Any:  # noqa: ANN401
    """Convert numpy scalars and arrays for JSON."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    msg = f"Object of type {type(value).__name__} is not JSON serializable"
    raise TypeError(msg)


def write_json(data: dict, path: Union[str, Path]) -> Path:
    """Write a structured report."""
    with open(path, "w", encoding="utf-8") as stream:  # noqa: PTH123
        json.dump(data, stream, indent=2, sort_keys=True, default=_plain)
        stream.write("\n")
    logger.info("wrote %s", path)
    return path


def read_json(path: Union[str, Path]) -> dict:
    """Read a structured report."""
    with open(path, encoding="utf-8") as stream:  # noqa: PTH123
        return json.load(stream)
