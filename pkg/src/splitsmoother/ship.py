"""Ship-tracking benchmark: model construction, simulation, and experiment runs.

A four-dimensional constant-velocity-style model tracks a ship whose state is
(x-velocity, x-position, y-velocity, y-position).  Range measurements come
from two stationary beacons on the x-axis, and the inequality constraint keeps
the estimated y-position above a sinusoidal bound.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import DimensionError, ProblemTooLargeError
from .models import ConstraintSet, NonlinearModel, eval_violation
from .oracle import DEFAULT_DENSE_BYTE_LIMIT, batch_split_solve
from .splitstate import ConvergenceTrace, InnerOptions, SolveOptions
from .splitting import SolveResult, solve

BEACON_1 = np.array([0.0, 0.0])
BEACON_2 = np.array([2.0 * np.pi, 0.0])


@dataclass(frozen=True)
class ShipExperimentConfig:
    """Parameters of one ship-tracking run.

    The trajectory covers one period: ``dt = 2*pi / T`` with the time grid
    ``t = dt, 2*dt, ..., 2*pi`` (grid starts at ``dt`` so the last step lands
    exactly on ``2*pi``).
    """

    T: int = 100
    tau: float = 0.25           # range-measurement noise std
    rho1: float = 1.0
    rho2: float = 1.0
    alpha1: float = 0.5
    alpha2: float = 0.5
    M: int = 1
    method: str = "admm"
    max_outer: int = 100
    max_inner: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.T < 2:
            raise DimensionError("T must be >= 2")
        if self.tau <= 0:
            raise DimensionError("tau must be positive")

    @property
    def dt(self) -> float:
        return 2.0 * np.pi / self.T

    def solve_options(self) -> SolveOptions:
        return SolveOptions(method=self.method, max_outer=self.max_outer,
                            rho1=self.rho1, rho2=self.rho2,
                            alpha1=self.alpha1, alpha2=self.alpha2, M=self.M,
                            inner=InnerOptions(max_inner=self.max_inner))


def time_grid(cfg: ShipExperimentConfig) -> np.ndarray:
    return cfg.dt * np.arange(1, cfg.T + 1)


def ship_truth(cfg: ShipExperimentConfig) -> np.ndarray:
    """Ground-truth states (1, t, -cos t, 1.3 - sin t) on the time grid."""
    t = time_grid(cfg)
    return np.column_stack([np.ones(cfg.T), t, -np.cos(t), 1.3 - np.sin(t)])


def ship_model(cfg: ShipExperimentConfig) -> tuple[NonlinearModel, ConstraintSet]:
    """Model and constraint set for the ship problem.

    Transition integrates positions with current velocities over one step; the
    process covariance uses the standard integrated-white-noise blocks per
    axis.  Measurements are ranges to the two beacons; the constraint is the
    scalar ``1.25 - sin(x2) - x4 <= 0`` at every step.  The prior mean is the
    truth at the first grid point with unit covariance.
    """
    dt = cfg.dt
    F = np.array([[1.0, 0.0, 0.0, 0.0],
                  [dt, 1.0, 0.0, 0.0],
                  [0.0, 0.0, 1.0, 0.0],
                  [0.0, 0.0, dt, 1.0]])
    qblk = np.array([[dt, dt ** 2 / 2.0], [dt ** 2 / 2.0, dt ** 3 / 3.0]])
    Q = np.zeros((4, 4))
    Q[:2, :2] = qblk
    Q[2:, 2:] = qblk

    two_pi = 2.0 * math.pi

    def h(x):
        px, py = x[1], x[3]
        return np.array([math.hypot(px, py), math.hypot(px - two_pi, py)])

    def jac_h(x):
        px, py = x[1], x[3]
        r1 = math.hypot(px, py)
        r2 = math.hypot(px - two_pi, py)
        return np.array([[0.0, px / r1, 0.0, py / r1],
                         [0.0, (px - two_pi) / r2, 0.0, py / r2]])

    m1 = np.array([1.0, dt, -np.cos(dt), 1.3 - np.sin(dt)])
    model = NonlinearModel(
        T=cfg.T, nx=4, ny=2,
        f=lambda t, x: F @ x,
        h=lambda t, x: h(x),
        Q=Q, R=cfg.tau ** 2 * np.eye(2),
        m1=m1, P1=np.eye(4),
        jac_f=lambda t, x: F,
        jac_h=lambda t, x: jac_h(x),
    )
    cons = ConstraintSet.constant(
        cfg.T, 4, nc=1,
        c=lambda x: np.array([1.25 - math.sin(x[1]) - x[3]]),
        jac_c=lambda x: np.array([[0.0, -math.cos(x[1]), 0.0, -1.0]]),
    )
    return model, cons


def simulate(cfg: ShipExperimentConfig) -> np.ndarray:
    """Range measurements of the true trajectory with i.i.d. Gaussian noise."""
    model, _ = ship_model(cfg)
    truth = ship_truth(cfg)
    rng = np.random.default_rng(cfg.seed)
    clean = np.array([model.h(t, truth[t]) for t in range(cfg.T)])
    return clean + cfg.tau * rng.standard_normal((cfg.T, 2))


def rmse_per_component(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean((est - truth) ** 2, axis=0))


@dataclass
class ExperimentResult:
    config: ShipExperimentConfig
    estimate: np.ndarray
    truth: np.ndarray
    rmse: np.ndarray                  # per state component, constrained estimate
    rmse_unconstrained: np.ndarray
    trace: ConvergenceTrace
    wall_time: float
    max_ineq: float
    status: str = "ok"


def run_experiment(cfg: ShipExperimentConfig) -> ExperimentResult:
    """Simulate one seed and solve it with the configured splitting method."""
    model, cons = ship_model(cfg)
    truth = ship_truth(cfg)
    meas = simulate(cfg)
    start = time.perf_counter()
    status = "ok"
    try:
        result = solve(model, cons, meas, cfg.solve_options())
    except Exception as exc:  # keep the failure in the result for reporting
        raise RuntimeError(f"solver failed: {exc}") from exc
    wall = time.perf_counter() - start
    max_ineq, _ = eval_violation(cons, result.trajectory)
    return ExperimentResult(
        config=cfg,
        estimate=result.trajectory,
        truth=truth,
        rmse=rmse_per_component(result.trajectory, truth),
        rmse_unconstrained=rmse_per_component(result.initial, truth),
        trace=result.trace,
        wall_time=wall,
        max_ineq=max_ineq,
        status=status,
    )


@dataclass
class ScalingRow:
    T: int
    solver: str
    mean_seconds: float
    status: str


def run_scaling(cfg: ShipExperimentConfig, T_list: Sequence[int], *,
                repeats: int = 3,
                include_batch: bool = True,
                max_dense_bytes: int = DEFAULT_DENSE_BYTE_LIMIT) -> List[ScalingRow]:
    """Time the smoother-based solver (and optionally the dense batch solver)
    at increasing T, averaging over ``repeats`` runs per size.

    The dense solver is reported as skipped, not crashed, once its normal
    equations would exceed ``max_dense_bytes``.
    """
    if list(T_list) != sorted(T_list):
        raise DimensionError("T list must be ascending")
    rows: List[ScalingRow] = []
    for T in T_list:
        size_cfg = replace(cfg, T=int(T))
        model, cons = ship_model(size_cfg)
        meas = simulate(size_cfg)
        opts = size_cfg.solve_options()

        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            solve(model, cons, meas, opts)
            times.append(time.perf_counter() - start)
        rows.append(ScalingRow(T=int(T), solver=f"cieks-{cfg.method}",
                               mean_seconds=float(np.mean(times)), status="ok"))

        if include_batch:
            times = []
            status = "ok"
            for _ in range(repeats):
                start = time.perf_counter()
                try:
                    batch_split_solve(cfg.method, model, cons, meas, opts,
                                      max_bytes=max_dense_bytes)
                except ProblemTooLargeError as exc:
                    status = f"skipped: {exc}"
                    times = []
                    break
                times.append(time.perf_counter() - start)
            mean = float(np.mean(times)) if times else float("nan")
            rows.append(ScalingRow(T=int(T), solver=f"batch-{cfg.method}",
                                   mean_seconds=mean, status=status))
    return rows
