"""Gaussian state-space models, constraint sets, and cost/Jacobian utilities.

Conventions used throughout the package:

* A trajectory is an ndarray of shape ``(T, nx)``; a measurement sequence is
  ``(T, ny)``.  Time indices are 0-based: step ``t`` runs over ``0..T-1``.
* The transition function ``f(t, x)`` maps the state at step ``t-1`` to the
  predicted state at step ``t`` and is defined for ``t = 1..T-1``; the process
  covariance for that transition is ``Q_at(t)``.
* The measurement function ``h(t, x)``, measurement covariance ``R_at(t)``, and
  constraints apply at every step ``t = 0..T-1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, NumericalError

VectorFunc = Callable[[int, np.ndarray], np.ndarray]


def _check_spd(mat: np.ndarray, name: str) -> None:
    if mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"{name} must be square, got {mat.shape}")
    if not np.allclose(mat, mat.T, atol=1e-10):
        raise DimensionError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{name} is not positive definite") from exc


def _cov_at(cov: np.ndarray, t: int) -> np.ndarray:
    """Slice a possibly time-varying covariance stack."""
    return cov[t] if cov.ndim == 3 else cov


def finite_diff_jacobian(func: Callable[[np.ndarray], np.ndarray],
                         x: np.ndarray,
                         h: Optional[float] = None) -> np.ndarray:
    """Central-difference Jacobian of ``func`` at ``x``.

    The default step is ``1e-6 * max(1, |x_j|)`` per coordinate.  Raises
    :class:`NumericalError` on non-finite function values.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    cols = []
    for j in range(n):
        hj = h if h is not None else 1e-6 * max(1.0, abs(x[j]))
        ej = np.zeros(n)
        ej[j] = hj
        fp = np.asarray(func(x + ej), dtype=float)
        fm = np.asarray(func(x - ej), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NumericalError("non-finite value in finite-difference Jacobian")
        cols.append((fp - fm) / (2.0 * hj))
    return np.column_stack(cols)


@dataclass(frozen=True)
class NonlinearModel:
    """Gaussian state-space model with additive noise.

    ``x_t = f(t, x_{t-1}) + q_t``, ``y_t = h(t, x_t) + r_t`` with
    ``q_t ~ N(0, Q_t)``, ``r_t ~ N(0, R_t)`` and Gaussian prior
    ``x_0 ~ N(m1, P1)``.  ``Q`` may be ``(nx, nx)`` (constant) or
    ``(T-1, nx, nx)``; likewise ``R`` may be ``(ny, ny)`` or ``(T, ny, ny)``.
    """

    T: int
    nx: int
    ny: int
    f: VectorFunc
    h: VectorFunc
    Q: np.ndarray
    R: np.ndarray
    m1: np.ndarray
    P1: np.ndarray
    jac_f: Optional[VectorFunc] = None
    jac_h: Optional[VectorFunc] = None

    def __post_init__(self):
        if self.T < 1 or self.nx < 1 or self.ny < 1:
            raise DimensionError("T, nx, ny must all be >= 1")
        object.__setattr__(self, "Q", np.asarray(self.Q, dtype=float))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float))
        object.__setattr__(self, "m1", np.asarray(self.m1, dtype=float))
        object.__setattr__(self, "P1", np.asarray(self.P1, dtype=float))
        if self.m1.shape != (self.nx,):
            raise DimensionError(f"m1 must have shape ({self.nx},)")
        _check_spd(self.P1, "P1")
        _check_spd(_cov_at(self.Q, 0), "Q")
        _check_spd(_cov_at(self.R, 0), "R")

    def Q_at(self, t: int) -> np.ndarray:
        """Process covariance for the transition into step ``t`` (t >= 1)."""
        return _cov_at(self.Q, t - 1)

    def R_at(self, t: int) -> np.ndarray:
        return _cov_at(self.R, t)

    def jf(self, t: int, x: np.ndarray) -> np.ndarray:
        if self.jac_f is not None:
            return np.asarray(self.jac_f(t, x), dtype=float)
        return finite_diff_jacobian(lambda z: self.f(t, z), x)

    def jh(self, t: int, x: np.ndarray) -> np.ndarray:
        if self.jac_h is not None:
            return np.asarray(self.jac_h(t, x), dtype=float)
        return finite_diff_jacobian(lambda z: self.h(t, z), x)


@dataclass(frozen=True)
class ConstraintSet:
    """Per-step equality/inequality constraints ``e_t(x) = 0``, ``c_t(x) <= 0``.

    ``nc[t]`` / ``ne[t]`` may be zero, meaning no constraint of that kind at
    step ``t``; the corresponding function is then never called there.
    """

    T: int
    nx: int
    nc: np.ndarray
    ne: np.ndarray
    c: Optional[VectorFunc] = None
    e: Optional[VectorFunc] = None
    jac_c: Optional[VectorFunc] = None
    jac_e: Optional[VectorFunc] = None

    def __post_init__(self):
        object.__setattr__(self, "nc", np.asarray(self.nc, dtype=int))
        object.__setattr__(self, "ne", np.asarray(self.ne, dtype=int))
        if self.nc.shape != (self.T,) or self.ne.shape != (self.T,):
            raise DimensionError("nc and ne must have length T")
        if np.any(self.nc < 0) or np.any(self.ne < 0):
            raise DimensionError("constraint counts must be nonnegative")
        if np.any(self.nc > 0) and self.c is None:
            raise DimensionError("nc > 0 requires an inequality function c")
        if np.any(self.ne > 0) and self.e is None:
            raise DimensionError("ne > 0 requires an equality function e")
        # plain-int copies and shared empty blocks for the hot accessors
        object.__setattr__(self, "_nc", self.nc.tolist())
        object.__setattr__(self, "_ne", self.ne.tolist())
        object.__setattr__(self, "_empty1", np.zeros(0))
        object.__setattr__(self, "_empty2", np.zeros((0, self.nx)))

    @classmethod
    def empty(cls, T: int, nx: int) -> "ConstraintSet":
        return cls(T=T, nx=nx, nc=np.zeros(T, dtype=int), ne=np.zeros(T, dtype=int))

    @classmethod
    def constant(cls, T: int, nx: int, *,
                 nc: int = 0, ne: int = 0,
                 c: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 e: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 jac_c: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 jac_e: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> "ConstraintSet":
        """Replicate one time-invariant constraint definition across all steps."""
        return cls(
            T=T, nx=nx,
            nc=np.full(T, nc, dtype=int), ne=np.full(T, ne, dtype=int),
            c=(lambda t, x: c(x)) if c is not None else None,
            e=(lambda t, x: e(x)) if e is not None else None,
            jac_c=(lambda t, x: jac_c(x)) if jac_c is not None else None,
            jac_e=(lambda t, x: jac_e(x)) if jac_e is not None else None,
        )

    def has_constraints(self) -> bool:
        return bool(np.any(self.nc > 0) or np.any(self.ne > 0))

    def c_at(self, t: int, x: np.ndarray) -> np.ndarray:
        n = self._nc[t]
        if n == 0:
            return self._empty1
        val = np.atleast_1d(np.asarray(self.c(t, x), dtype=float))
        if val.shape != (n,):
            raise DimensionError(f"c at t={t} returned shape {val.shape}, "
                                 f"declared ({n},)")
        return val

    def e_at(self, t: int, x: np.ndarray) -> np.ndarray:
        n = self._ne[t]
        if n == 0:
            return self._empty1
        val = np.atleast_1d(np.asarray(self.e(t, x), dtype=float))
        if val.shape != (n,):
            raise DimensionError(f"e at t={t} returned shape {val.shape}, "
                                 f"declared ({n},)")
        return val

    def jc_at(self, t: int, x: np.ndarray) -> np.ndarray:
        if self._nc[t] == 0:
            return self._empty2
        if self.jac_c is not None:
            return np.atleast_2d(np.asarray(self.jac_c(t, x), dtype=float))
        return np.atleast_2d(finite_diff_jacobian(lambda z: self.c(t, z), x))

    def je_at(self, t: int, x: np.ndarray) -> np.ndarray:
        if self._ne[t] == 0:
            return self._empty2
        if self.jac_e is not None:
            return np.atleast_2d(np.asarray(self.jac_e(t, x), dtype=float))
        return np.atleast_2d(finite_diff_jacobian(lambda z: self.e(t, z), x))


def constant_model(T: int, nx: int, ny: int, *,
                   f: Callable[[np.ndarray], np.ndarray],
                   h: Callable[[np.ndarray], np.ndarray],
                   Q: np.ndarray, R: np.ndarray,
                   m1: np.ndarray, P1: np.ndarray,
                   jac_f: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                   jac_h: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> NonlinearModel:
    """Build a time-invariant :class:`NonlinearModel` from single definitions."""
    return NonlinearModel(
        T=T, nx=nx, ny=ny,
        f=lambda t, x: f(x), h=lambda t, x: h(x),
        Q=Q, R=R, m1=m1, P1=P1,
        jac_f=(lambda t, x: jac_f(x)) if jac_f is not None else None,
        jac_h=(lambda t, x: jac_h(x)) if jac_h is not None else None,
    )


def check_trajectory(model: NonlinearModel, traj: np.ndarray) -> np.ndarray:
    traj = np.asarray(traj, dtype=float)
    if traj.shape != (model.T, model.nx):
        raise DimensionError(f"trajectory must have shape ({model.T}, {model.nx}), "
                             f"got {traj.shape}")
    if not np.all(np.isfinite(traj)):
        raise NumericalError("trajectory contains non-finite entries")
    return traj


def check_measurements(model: NonlinearModel, meas: np.ndarray) -> np.ndarray:
    meas = np.asarray(meas, dtype=float)
    if meas.shape != (model.T, model.ny):
        raise DimensionError(f"measurements must have shape ({model.T}, {model.ny}), "
                             f"got {meas.shape}")
    if not np.all(np.isfinite(meas)):
        raise NumericalError("measurements contain non-finite entries")
    return meas


def _quad_form(chol_factor, resid: np.ndarray) -> float:
    # resid' S^{-1} resid via a triangular solve against the Cholesky factor
    half = scipy.linalg.solve_triangular(chol_factor, resid, lower=True)
    return float(half @ half)


def eval_theta(model: NonlinearModel, traj: np.ndarray, meas: np.ndarray) -> float:
    """Negative log-posterior of the trajectory, up to an additive constant.

    Sum of the measurement, transition, and prior quadratic forms, each
    weighted by the corresponding inverse covariance (evaluated through
    Cholesky solves, never an explicit inverse).
    """
    traj = check_trajectory(model, traj)
    meas = check_measurements(model, meas)

    total = 0.0
    chol_P1 = np.linalg.cholesky(model.P1)
    total += 0.5 * _quad_form(chol_P1, traj[0] - model.m1)

    h_resid = np.empty((model.T, model.ny))
    for t in range(model.T):
        h_resid[t] = meas[t] - np.asarray(model.h(t, traj[t]), dtype=float)
    if model.R.ndim == 3:
        for t in range(model.T):
            total += 0.5 * _quad_form(np.linalg.cholesky(model.R_at(t)),
                                      h_resid[t])
    else:
        # constant covariance: one stacked triangular solve for all steps
        half = scipy.linalg.solve_triangular(np.linalg.cholesky(model.R),
                                             h_resid.T, lower=True)
        total += 0.5 * float(np.sum(half * half))

    if model.T > 1:
        f_resid = np.empty((model.T - 1, model.nx))
        for t in range(1, model.T):
            f_resid[t - 1] = traj[t] - np.asarray(model.f(t, traj[t - 1]),
                                                  dtype=float)
        if model.Q.ndim == 3:
            for t in range(1, model.T):
                total += 0.5 * _quad_form(np.linalg.cholesky(model.Q_at(t)),
                                          f_resid[t - 1])
        else:
            half = scipy.linalg.solve_triangular(np.linalg.cholesky(model.Q),
                                                 f_resid.T, lower=True)
            total += 0.5 * float(np.sum(half * half))

    if not np.isfinite(total):
        raise NumericalError("non-finite cost value")
    return total


def eval_violation(cons: ConstraintSet, traj: np.ndarray) -> tuple[float, float]:
    """Worst-case constraint violation over the trajectory.

    Returns ``(max_ineq, max_eq)`` where ``max_ineq`` is the largest positive
    part of any inequality component and ``max_eq`` the largest absolute
    equality component.  Both are 0 when the constraint set is empty.
    """
    traj = np.asarray(traj, dtype=float)
    if traj.shape[0] != cons.T:
        raise DimensionError("trajectory length does not match constraint set")
    max_ineq = 0.0
    max_eq = 0.0
    for t in range(cons.T):
        cval = cons.c_at(t, traj[t])
        if cval.size:
            max_ineq = max(max_ineq, float(np.max(np.maximum(0.0, cval))))
        eval_ = cons.e_at(t, traj[t])
        if eval_.size:
            max_eq = max(max_eq, float(np.max(np.abs(eval_))))
    return max_ineq, max_eq


def validate_jacobians(model: NonlinearModel,
                       cons: Optional[ConstraintSet] = None,
                       *, n_points: int = 5, rtol: float = 1e-4,
                       rng: Optional[np.random.Generator] = None) -> None:
    """Check supplied analytic Jacobians against central finite differences.

    Samples random points near the prior mean; raises :class:`NumericalError`
    if any analytic Jacobian deviates by more than ``rtol`` in relative terms.
    """
    rng = rng or np.random.default_rng(0)
    scale = 1.0 + np.sqrt(np.abs(np.diag(model.P1)))

    def _compare(analytic, numeric, what):
        denom = max(1.0, float(np.max(np.abs(numeric))))
        err = float(np.max(np.abs(analytic - numeric))) / denom
        if err > rtol:
            raise NumericalError(f"analytic Jacobian of {what} deviates from "
                                 f"finite differences (rel err {err:.2e})")

    for _ in range(n_points):
        x = model.m1 + scale * rng.standard_normal(model.nx)
        if model.jac_f is not None:
            t = int(rng.integers(1, max(2, model.T)))
            _compare(model.jf(t, x),
                     finite_diff_jacobian(lambda z: model.f(t, z), x), "f")
        if model.jac_h is not None:
            t = int(rng.integers(0, model.T))
            _compare(model.jh(t, x),
                     finite_diff_jacobian(lambda z: model.h(t, z), x), "h")
        if cons is not None:
            if cons.jac_c is not None and np.any(cons.nc > 0):
                t = int(np.flatnonzero(cons.nc > 0)[0])
                _compare(cons.jc_at(t, x),
                         finite_diff_jacobian(lambda z: cons.c(t, z), x), "c")
            if cons.jac_e is not None and np.any(cons.ne > 0):
                t = int(np.flatnonzero(cons.ne > 0)[0])
                _compare(cons.je_at(t, x),
                         finite_diff_jacobian(lambda z: cons.e(t, z), x), "e")


def prior_rollout(model: NonlinearModel) -> np.ndarray:
    """Deterministic rollout ``x_0 = m1``, ``x_t = f(t, x_{t-1})``."""
    traj = np.empty((model.T, model.nx))
    traj[0] = model.m1
    for t in range(1, model.T):
        traj[t] = np.asarray(model.f(t, traj[t - 1]), dtype=float)
    return traj
