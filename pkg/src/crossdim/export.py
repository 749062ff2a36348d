"""Deterministic CSV/JSON artifact writers.

Floats print with 17 significant digits; rows use LF newlines regardless
of platform, so equal inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

__all__ = [
    "format_float",
    "write_error_csv",
    "write_events_csv",
    "write_json",
    "write_outputs_csv",
    "write_trajectory_csv",
]


def format_float(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def _write_lines(path, lines):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in lines:
            fh.write(line + "\n")


def write_trajectory_csv(traj, path):
    """Rows: t, mode, dim, v_norm, x_0..x_{D-1}; short states padded with empties."""
    D = traj.max_dim if len(traj.states) else 0
    header = ["t", "mode", "dim", "v_norm"] + [f"x_{i}" for i in range(D)]
    lines = [",".join(header)]
    for k in range(len(traj.times)):
        state = traj.states[k]
        cells = [
            format_float(traj.times[k]),
            str(int(traj.mode_indices[k])),
            str(int(traj.dims[k])),
            format_float(traj.vnorms[k]),
        ]
        cells.extend(format_float(v) for v in state)
        cells.extend([""] * (D - state.size))
        lines.append(",".join(cells))
    _write_lines(path, lines)


def write_events_csv(events, path):
    """Rows: t, pre_dim, post_dim, gap, amplitude."""
    lines = [",".join(["t", "pre_dim", "post_dim", "gap", "amplitude"])]
    for ev in events:
        lines.append(
            ",".join(
                [
                    format_float(ev.time),
                    str(ev.pre_dim),
                    str(ev.post_dim),
                    format_float(ev.gap),
                    format_float(ev.amplitude),
                ]
            )
        )
    _write_lines(path, lines)


def write_outputs_csv(traj, path):
    """Rows: t, y_0..y_{p-1} (only written when an output map is configured)."""
    p = max(y.size for y in traj.outputs)
    lines = [",".join(["t"] + [f"y_{i}" for i in range(p)])]
    for k in range(len(traj.times)):
        cells = [format_float(traj.times[k])]
        cells.extend(format_float(v) for v in traj.outputs[k])
        lines.append(",".join(cells))
    _write_lines(path, lines)


def write_error_csv(rows, path):
    """Rows: t, m, E for reduction-error tables."""
    lines = [",".join(["t", "m", "E"])]
    for t, m, e in rows:
        lines.append(",".join([format_float(t), str(int(m)), format_float(e)]))
    _write_lines(path, lines)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(obj, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
