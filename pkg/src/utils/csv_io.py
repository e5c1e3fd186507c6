# src/utils/csv_io.py

"""
Artifact writers and readers shared by the CLI and the experiment runner.

### Functions:
- `write_csv_table`: Writes a DataFrame with 17 significant digits.
- `read_csv_table`: Reads a CSV written by `write_csv_table`.
- `trajectory_frame`: Turns a trajectory into a `t,x1,...,xd` DataFrame.
- `write_manifest` / `read_manifest`: JSON manifest with sorted keys.
"""

import json
import logging
import os
from pathlib import Path

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"


def write_csv_table(df, path):
    """
    Save a table so that every float survives a round trip exactly.

    Args:
        df (pd.DataFrame): table to save.
        path (str | Path): destination file; parent folders are created.

    Returns:
        Path: the written path.
    """
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    try:
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except Exception as e:
        logging.error(f"❌ Failed to write {path}: {e}")
        raise e
    return path


def read_csv_table(path):
    """Load a CSV written by `write_csv_table` (float columns parsed at full precision)."""
    return pd.read_csv(path, float_precision="round_trip")


def trajectory_frame(traj):
    """
    Flatten a trajectory into a `t,x1,...,xd` table.

    Args:
        traj (Trajectory): solver output.

    Returns:
        pd.DataFrame: one row per grid point.
    """
    states = np.atleast_2d(np.asarray(traj.states, dtype=float))
    if states.shape[0] != len(traj.times):
        states = states.reshape(len(traj.times), -1)
    columns = {"t": np.asarray(traj.times, dtype=float)}
    for i in range(states.shape[1]):
        columns[f"x{i + 1}"] = states[:, i]
    return pd.DataFrame(columns)


def write_manifest(manifest, path):
    """Write a manifest dict as deterministic JSON (sorted keys, trailing newline)."""
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def read_manifest(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return value.as_posix()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")
