"""Trajectory CSVs and JSON summaries."""
from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .trainer import NEURON_FIELDS, SCALAR_FIELDS, Trajectory

__all__ = ["TrajectoryIOError", "trajectory_header", "write_trajectory", "read_trajectory", "write_json", "write_table"]

# CSV column stems for the per-neuron blocks, in block order
NEURON_COLUMNS = ("par", "perp_norm", "compA", "compB", "compC_norm", "compD_norm")


class TrajectoryIOError(OSError):
    """Reading or writing an output file failed."""


def _fmt(x) -> str:
    return format(float(x), ".17g")


def trajectory_header(K: int) -> list:
    cols = ["t", *SCALAR_FIELDS]
    for k in range(1, K + 1):
        cols += [f"{stem}_{k}" for stem in NEURON_COLUMNS]
    return cols


def _ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_table(path, header, rows):
    """Comma-delimited table with LF line endings; floats use 17 significant digits."""
    try:
        _ensure_parent(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, (str, int, np.integer)) else _fmt(v) for v in row])
    except OSError as exc:
        raise TrajectoryIOError(f"cannot write {path}: {exc}") from exc


def write_trajectory(traj: Trajectory, path) -> None:
    K = traj.K
    scal = [getattr(traj, f) for f in SCALAR_FIELDS]
    neur = [getattr(traj, f) for f in NEURON_FIELDS]

    def rows():
        for i in range(len(traj)):
            row = [int(traj.t[i])] + [a[i] for a in scal]
            for k in range(K):
                row += [a[i, k] for a in neur]
            yield row

    write_table(path, trajectory_header(K), rows())


def read_trajectory(path, *, eta=math.nan, norm_w_star=1.0) -> Trajectory:
    """Parse a CSV written by :func:`write_trajectory`.

    The file does not carry ``eta`` or the teacher norm; pass them if later
    computations need them.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise TrajectoryIOError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise TrajectoryIOError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    n_neuron_cols = len(header) - 1 - len(SCALAR_FIELDS)
    if n_neuron_cols <= 0 or n_neuron_cols % len(NEURON_COLUMNS):
        raise TrajectoryIOError(f"{path}: unexpected header")
    K = n_neuron_cols // len(NEURON_COLUMNS)
    if header != trajectory_header(K):
        raise TrajectoryIOError(f"{path}: unexpected header")
    data = np.array([[float(v) for v in r[1:]] for r in body]).reshape(len(body), -1)
    fields = {"t": np.array([int(r[0]) for r in body], dtype=np.int64)}
    ns = len(SCALAR_FIELDS)
    for j, f in enumerate(SCALAR_FIELDS):
        fields[f] = data[:, j].copy()
    block = data[:, ns:].reshape(len(body), K, len(NEURON_FIELDS))
    for j, f in enumerate(NEURON_FIELDS):
        fields[f] = block[:, :, j].copy()
    return Trajectory(**fields, K=K, eta=eta, norm_w_star=norm_w_star)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path) -> None:
    try:
        _ensure_parent(path)
        with open(path, "w", newline="") as fh:
            json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise TrajectoryIOError(f"cannot write {path}: {exc}") from exc
