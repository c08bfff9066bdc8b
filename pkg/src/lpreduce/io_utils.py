"""Deterministic, atomic output writers.

All numeric output goes through ``repr`` of Python floats (shortest
round-trip decimals), JSON objects are written with sorted keys, and files
are written atomically (temp file in the target directory + rename) so
outputs are byte-stable across runs with identical inputs.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np


def jsonify(obj):
    """Recursively convert numpy containers/scalars to plain Python."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonify(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, json.dumps(jsonify(obj), indent=2, sort_keys=True) + "\n")


def format_float(x):
    return repr(float(x))


def write_csv(path, header, rows):
    """Write rows of floats with shortest round-trip formatting."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_float(x) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def trajectory_csv_header(n_p, n_v, n_g):
    """Stable simulate/compare column order (documented in the README)."""
    cols = ["t"]
    cols += [f"q_star_{i}" for i in range(n_p)]
    cols += [f"f_tilde_{i}" for i in range(n_v)]
    cols += [f"omega_p_{i}" for i in range(n_p)]
    cols += [f"omega_v_{i}" for i in range(n_v)]
    cols += [f"p_{i}" for i in range(n_g)]
    cols += [f"a_{i}" for i in range(n_g)]
    cols += ["energy"]
    cols += [f"vertical_invariant_{i}" for i in range(n_g)]
    cols += ["gauge_residual", "tangency_residual"]
    return cols


def trajectory_rows(trajectory):
    rows = []
    for i, state in enumerate(trajectory.states):
        row = [trajectory.times[i]]
        row += list(state.q_star) + list(state.f_tilde)
        row += list(state.omega_p) + list(state.omega_v)
        row += list(state.p) + list(state.a)
        row.append(trajectory.energy[i])
        row += list(trajectory.vertical_invariant[i])
        row += [trajectory.gauge_residual[i], trajectory.tangency_residual[i]]
        rows.append(row)
    return rows
