"""CSV and JSON artifact writers.

Floats are written with ``repr`` precision so identical runs give
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .restore import EVENT_KINDS

__all__ = [
    "write_samples_csv",
    "write_events_csv",
    "write_points_csv",
    "write_regenerations_csv",
    "write_summary_json",
    "read_samples_csv",
]

_FMT = "%.17g"


def _state_header(d: int) -> list[str]:
    return [f"x{j + 1}" for j in range(d)]


def _write_table(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack(columns) if columns else np.empty((0, len(header)))
    fmt = [("%d" if np.issubdtype(np.asarray(c).dtype, np.integer) else _FMT)
           for c in columns] if columns else _FMT
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        if data.shape[0]:
            np.savetxt(fh, data, fmt=fmt, delimiter=",")
    return path


def write_samples_csv(path, times, tours, states):
    """``time,tour,x1..xd``."""
    states = np.asarray(states, dtype=float)
    d = states.shape[1]
    cols = [np.asarray(times, float), np.asarray(tours, np.int64)]
    cols += [states[:, j] for j in range(d)]
    return _write_table(path, ["time", "tour", *_state_header(d)], cols)


def write_events_csv(path, times, kinds):
    """``time,kind`` with kind names such as ``regen-accept``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("time,kind\n")
        fh.writelines(f"{t!r},{EVENT_KINDS[k]}\n" for t, k in zip(np.asarray(times).tolist(),
                                                                   np.asarray(kinds).tolist()))
    return path


def write_points_csv(path, times_added, points):
    """``time_added,x1..xd`` for the adaptive point-mass store."""
    points = np.asarray(points, dtype=float)
    d = points.shape[1]
    cols = [np.asarray(times_added, float)] + [points[:, j] for j in range(d)]
    return _write_table(path, ["time_added", *_state_header(d)], cols)


def write_regenerations_csv(path, times, states):
    """``time,x1..xd`` for accepted regeneration destinations."""
    states = np.asarray(states, dtype=float)
    d = states.shape[1]
    cols = [np.asarray(times, float)] + [states[:, j] for j in range(d)]
    return _write_table(path, ["time", *_state_header(d)], cols)


def write_summary_json(path, summary: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path


def read_samples_csv(path):
    """Returns ``(times, tours, states)``."""
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return arr[:, 0], arr[:, 1].astype(np.int64), arr[:, 2:]
