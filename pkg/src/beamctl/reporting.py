"""CSV and run-report writers.

Formats are fixed so downstream tooling can rely on them:

* pattern CSV: header ``theta_deg,level_db``, 6 decimal places;
* weight CSV: header ``index,re,im``, full double precision;
* snapshots CSV: header ``t,re_0,im_0,...``;
* run report: JSON with sorted keys and no timestamps, so identical inputs
  produce byte-identical reports.
"""

from __future__ import annotations

import json
import os

import numpy as np


def write_pattern_csv(path, angles_deg, levels_db):
    with open(path, "w") as fh:
        fh.write("theta_deg,level_db\n")
        for theta, level in zip(angles_deg, levels_db):
            fh.write(f"{theta:.6f},{level:.6f}\n")


def write_weight_csv(path, weight):
    with open(path, "w") as fh:
        fh.write("index,re,im\n")
        for i, w in enumerate(np.asarray(weight)):
            fh.write(f"{i},{w.real:.17e},{w.imag:.17e}\n")


def write_trace_csv(path, values, value_name="value"):
    with open(path, "w") as fh:
        fh.write(f"iteration,{value_name}\n")
        for i, v in enumerate(values, start=1):
            fh.write(f"{i},{v:.17e}\n")


def write_snapshots_csv(path, snapshots):
    X = np.atleast_2d(np.asarray(snapshots))
    n = X.shape[1]
    header = "t," + ",".join(f"re_{i},im_{i}" for i in range(n))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for t, row in enumerate(X):
            cells = ",".join(f"{v.real:.17e},{v.imag:.17e}" for v in row)
            fh.write(f"{t},{cells}\n")


def read_weight_csv(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return rows[:, 1] + 1j * rows[:, 2]


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_report(out_dir, command, config_sha256, metrics=None, traces=None,
                 outputs=None):
    """Run report with command echo, config hash, metrics and file manifest."""
    report = {
        "command": list(command),
        "config_sha256": config_sha256,
        "metrics": _to_jsonable(metrics or {}),
        "traces": _to_jsonable(traces or {}),
        "outputs": _to_jsonable(outputs or {}),
    }
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
