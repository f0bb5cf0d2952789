"""Trajectory and report export.

CSV columns for a full trajectory are ``t, re_x1, im_x1, ..., re_xN, im_xN,
re_p1, im_p1, ...``; reduced trajectories use ``alpha`` in place of ``p``.
Floats are written with ``repr`` so output is bit-reproducible.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .bkp import ReducedState
from .dynamics import CMState
from .integrate import Trajectory

__all__ = ["trajectory_columns", "write_trajectory_csv", "trajectory_to_dict",
           "write_json", "config_hash", "read_trajectory_csv"]


def _tool_version():
    from . import __version__
    return __version__


def _parts(state):
    if isinstance(state, CMState):
        return "p", state.x, state.p
    if isinstance(state, ReducedState):
        return "alpha", state.x, state.alpha
    raise TypeError(f"cannot export state of type {type(state).__name__}")


def trajectory_columns(traj: Trajectory) -> list[str]:
    name, x, _ = _parts(traj.states[0])
    cols = ["t"]
    for label in ("x", name):
        for i in range(1, x.size + 1):
            cols += [f"re_{label}{i}", f"im_{label}{i}"]
    return cols


def _row(t, state):
    _, x, y = _parts(state)
    vals = [float(t)]
    for arr in (x, y):
        for v in arr:
            vals += [float(v.real), float(v.imag)]
    return vals


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_columns(traj))
        for t, s in zip(traj.times, traj.states):
            w.writerow([repr(v) for v in _row(t, s)])


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def trajectory_to_dict(traj: Trajectory, config: dict | None = None) -> dict:
    meta = dict(traj.meta)
    meta["tool_version"] = _tool_version()
    if config is not None:
        meta["config_hash"] = config_hash(config)
    return {
        "columns": trajectory_columns(traj),
        "rows": [_row(t, s) for t, s in zip(traj.times, traj.states)],
        "step_stats": traj.step_stats,
        "meta": meta,
    }


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
