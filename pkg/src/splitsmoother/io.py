"""CSV and key-value serialization for experiment inputs and outputs.

All floats are written with repr-exact precision so files round-trip through
the package's own readers without loss.
"""

from __future__ import annotations

import csv
from dataclasses import asdict
from pathlib import Path
from typing import List, Sequence

import numpy as np

from .ship import ScalingRow, ShipExperimentConfig
from .splitstate import ConvergenceTrace

_FMT = "%.17g"


def _fmt(x: float) -> str:
    return _FMT % float(x)


def write_trajectory_csv(path, traj: np.ndarray, times: Sequence[float]) -> None:
    traj = np.asarray(traj, dtype=float)
    ncols = traj.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "t"] + [f"x{i + 1}" for i in range(ncols)])
        for k, (t, row) in enumerate(zip(times, traj), start=1):
            writer.writerow([k, _fmt(t)] + [_fmt(v) for v in row])


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (times, trajectory)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    return data[:, 0], data[:, 1:]


def write_measurements_csv(path, meas: np.ndarray, times: Sequence[float]) -> None:
    meas = np.asarray(meas, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "t"] + [f"y{i + 1}" for i in range(meas.shape[1])])
        for k, (t, row) in enumerate(zip(times, meas), start=1):
            writer.writerow([k, _fmt(t)] + [_fmt(v) for v in row])


def read_measurements_csv(path) -> tuple[np.ndarray, np.ndarray]:
    return read_trajectory_csv(path)


def write_trace_csv(path, trace: ConvergenceTrace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "theta", "max_ineq", "max_eq", "step_norm",
                         "wall_ms"])
        for k in range(len(trace)):
            writer.writerow([k + 1, _fmt(trace.theta[k]), _fmt(trace.max_ineq[k]),
                             _fmt(trace.max_eq[k]), _fmt(trace.step_norm[k]),
                             _fmt(1000.0 * trace.wall_time[k])])


def read_trace_csv(path) -> ConvergenceTrace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    trace = ConvergenceTrace()
    for row in rows[1:]:
        trace.record(float(row[1]), float(row[2]), float(row[3]),
                     float(row[4]), float(row[5]) / 1000.0)
    return trace


def write_scaling_csv(path, rows: List[ScalingRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["T", "solver", "mean_seconds", "status"])
        for row in rows:
            writer.writerow([row.T, row.solver, _fmt(row.mean_seconds), row.status])


def write_config(path, cfg: ShipExperimentConfig, extra: dict | None = None) -> None:
    """Key-value text dump of the run configuration plus grid metadata."""
    items = asdict(cfg)
    items["dt"] = cfg.dt
    items["time_grid"] = "t_k = k*dt for k = 1..T (last step at 2*pi)"
    if extra:
        items.update(extra)
    with open(path, "w") as fh:
        for key, value in items.items():
            fh.write(f"{key} = {value}\n")


def read_config(path) -> ShipExperimentConfig:
    values = {}
    for line in Path(path).read_text().splitlines():
        if "=" not in line:
            continue
        key, _, raw = line.partition("=")
        values[key.strip()] = raw.strip()
    return ShipExperimentConfig(
        T=int(values["T"]),
        tau=float(values["tau"]),
        rho1=float(values["rho1"]),
        rho2=float(values["rho2"]),
        alpha1=float(values["alpha1"]),
        alpha2=float(values["alpha2"]),
        M=int(values["M"]),
        method=values["method"],
        max_outer=int(values["max_outer"]),
        max_inner=int(values["max_inner"]),
        seed=int(values["seed"]),
    )
