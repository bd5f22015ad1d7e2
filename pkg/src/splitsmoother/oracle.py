"""Dense batch reference solvers.

Brute-force counterparts of the smoother path: the quadratic subproblem is
assembled as one dense system over the stacked trajectory and solved by a
Cholesky factorization, deliberately ignoring the block-tridiagonal sparsity.
Used to cross-validate the smoother implementations and as the batch baseline
in runtime comparisons.  Shares no solver code with the smoother path; only
the model-function definitions are common.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from time import perf_counter
from typing import List, Optional

import numpy as np
import scipy.linalg

from .cks import AffineModel
from .exceptions import DimensionError, NumericalError, ProblemTooLargeError
from .models import (ConstraintSet, NonlinearModel, check_measurements,
                     check_trajectory, eval_theta, eval_violation,
                     prior_rollout)
from .splitstate import ConvergenceTrace, InnerOptions, SolveOptions, SplitState

DEFAULT_DENSE_BYTE_LIMIT = 2 ** 31  # 2 GiB for the stacked normal-equation matrix


def batch_theta_grad(model: NonlinearModel, traj: np.ndarray,
                     meas: np.ndarray) -> np.ndarray:
    """Exact gradient of the trajectory cost, stacked to length ``T * nx``."""
    traj = check_trajectory(model, traj)
    meas = check_measurements(model, meas)
    T, nx = model.T, model.nx
    grad = np.zeros((T, nx))

    grad[0] += np.linalg.solve(model.P1, traj[0] - model.m1)
    for t in range(T):
        resid = meas[t] - np.asarray(model.h(t, traj[t]), dtype=float)
        grad[t] -= model.jh(t, traj[t]).T @ np.linalg.solve(model.R_at(t), resid)
    for t in range(1, T):
        resid = traj[t] - np.asarray(model.f(t, traj[t - 1]), dtype=float)
        wres = np.linalg.solve(model.Q_at(t), resid)
        grad[t] += wres
        grad[t - 1] -= model.jf(t, traj[t - 1]).T @ wres
    out = grad.ravel()
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite gradient")
    return out


def _penalty_shifts(split: SplitState, scaled: bool):
    """Constant shifts inside the penalty residuals of the x-objective."""
    if scaled:
        s = [v + eta / split.rho1 for v, eta in zip(split.v, split.eta)]
        u = [zeta / split.rho2 for zeta in split.zeta]
    else:
        s = [v + eta for v, eta in zip(split.v, split.eta)]
        u = [zeta.copy() for zeta in split.zeta]
    return s, u


def assemble_normal_equations(aff: AffineModel, split: SplitState,
                              meas: np.ndarray, scaled: bool = True):
    """Dense Hessian and right-hand side of the affine x-subproblem."""
    T, nx = aff.T, aff.nx
    n = T * nx
    M = np.zeros((n, n))
    rhs = np.zeros(n)

    def blk(t):
        return slice(t * nx, (t + 1) * nx)

    P1inv = np.linalg.inv(aff.P1)
    M[blk(0), blk(0)] += P1inv
    rhs[blk(0)] += P1inv @ aff.m1

    for t in range(T):
        H = aff.H[t]
        Rinv_H = np.linalg.solve(aff.R_at(t), H)
        M[blk(t), blk(t)] += H.T @ Rinv_H
        rhs[blk(t)] += Rinv_H.T @ (meas[t] - aff.g[t])

    for t in range(1, T):
        A = aff.A[t - 1]
        Qinv = np.linalg.inv(aff.Q_at(t))
        M[blk(t), blk(t)] += Qinv
        M[blk(t - 1), blk(t - 1)] += A.T @ Qinv @ A
        M[blk(t), blk(t - 1)] -= Qinv @ A
        M[blk(t - 1), blk(t)] -= A.T @ Qinv
        rhs[blk(t)] += Qinv @ aff.b[t - 1]
        rhs[blk(t - 1)] -= A.T @ Qinv @ aff.b[t - 1]

    s, u = _penalty_shifts(split, scaled)
    for t in range(T):
        if aff.nc(t) > 0:
            C = aff.C[t]
            M[blk(t), blk(t)] += split.rho1 * C.T @ C
            rhs[blk(t)] -= split.rho1 * C.T @ (aff.d[t] + s[t])
        if aff.ne(t) > 0:
            E = aff.E[t]
            M[blk(t), blk(t)] += split.rho2 * E.T @ E
            rhs[blk(t)] -= split.rho2 * E.T @ (aff.f[t] + u[t])

    return M, rhs


def batch_qp_solve(aff: AffineModel, split: SplitState, meas: np.ndarray,
                   scaled: bool = True,
                   max_bytes: Optional[int] = None) -> np.ndarray:
    """Unique minimizer of the affine x-subproblem via a dense Cholesky solve."""
    meas = np.asarray(meas, dtype=float)
    if meas.shape != (aff.T, aff.ny):
        raise DimensionError(f"measurements must have shape ({aff.T}, {aff.ny})")
    n = aff.T * aff.nx
    if max_bytes is not None and 8 * n * n > max_bytes:
        raise ProblemTooLargeError(
            f"dense normal equations would need {8 * n * n / 2**30:.1f} GiB "
            f"(limit {max_bytes / 2**30:.1f} GiB) at T={aff.T}")
    M, rhs = assemble_normal_equations(aff, split, meas, scaled)
    try:
        factor = scipy.linalg.cho_factor(M, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError("singular dense Hessian") from exc
    return scipy.linalg.cho_solve(factor, rhs).reshape(aff.T, aff.nx)


def _linearize_dense(model: NonlinearModel, cons: ConstraintSet,
                     traj: np.ndarray) -> AffineModel:
    # Independent re-derivation of the affine expansion used by the dense path.
    T, nx, ny = model.T, model.nx, model.ny
    A = np.empty((T - 1, nx, nx))
    b = np.empty((T - 1, nx))
    for t in range(1, T):
        J = model.jf(t, traj[t - 1])
        A[t - 1] = J
        b[t - 1] = np.asarray(model.f(t, traj[t - 1]), dtype=float) - J @ traj[t - 1]
    H = np.empty((T, ny, nx))
    g = np.empty((T, ny))
    C, d, E, f = [], [], [], []
    for t in range(T):
        J = model.jh(t, traj[t])
        H[t] = J
        g[t] = np.asarray(model.h(t, traj[t]), dtype=float) - J @ traj[t]
        Jc = cons.jc_at(t, traj[t])
        C.append(Jc)
        d.append(cons.c_at(t, traj[t]) - Jc @ traj[t])
        Je = cons.je_at(t, traj[t])
        E.append(Je)
        f.append(cons.e_at(t, traj[t]) - Je @ traj[t])
    return AffineModel(T=T, nx=nx, ny=ny, A=A, b=b, H=H, g=g, C=C, d=d,
                       E=E, f=f, Q=model.Q, R=model.R, m1=model.m1, P1=model.P1)


def batch_gauss_newton(model: NonlinearModel, cons: ConstraintSet,
                       split: SplitState, init: np.ndarray, meas: np.ndarray,
                       opts: Optional[InnerOptions] = None,
                       scaled: bool = True,
                       max_bytes: Optional[int] = None) -> List[np.ndarray]:
    """Dense Gauss-Newton on the x-objective; returns the iterate sequence.

    Same stopping rule as the smoother-based inner loop: quit once the
    sup-norm step drops below ``tol_inner`` or after ``max_inner`` rounds.
    """
    opts = opts or InnerOptions()
    x = check_trajectory(model, init)
    iterates: List[np.ndarray] = []
    for i in range(opts.max_inner):
        aff = _linearize_dense(model, cons, x)
        x_new = batch_qp_solve(aff, split, meas, scaled=scaled, max_bytes=max_bytes)
        if not np.all(np.isfinite(x_new)):
            raise NumericalError(f"divergent dense Gauss-Newton iterate at {i}")
        iterates.append(x_new.copy())
        step = float(np.max(np.abs(x_new - x)))
        x = x_new
        if step <= opts.tol_inner:
            break
    return iterates


@dataclass
class BatchSplitResult:
    trajectory: np.ndarray
    trace: ConvergenceTrace
    v: List[np.ndarray] = field(default_factory=list)
    eta: List[np.ndarray] = field(default_factory=list)
    zeta: List[np.ndarray] = field(default_factory=list)


def batch_split_solve(method: str, model: NonlinearModel, cons: ConstraintSet,
                      meas: np.ndarray, opts: Optional[SolveOptions] = None,
                      max_bytes: int = DEFAULT_DENSE_BYTE_LIMIT,
                      iterates_out: Optional[List[np.ndarray]] = None) -> BatchSplitResult:
    """Full outer splitting loop with dense Gauss-Newton x-updates.

    Mirrors the smoother-based loop step for step (same initialization, same
    stopping rules) so the two can be compared iterate-for-iterate.  Refuses
    cleanly, via :class:`ProblemTooLargeError`, when the dense system would
    exceed ``max_bytes``.
    """
    opts = opts or SolveOptions()
    if method not in ("admm", "prs", "sbm"):
        raise DimensionError(f"unknown method {method!r}")
    if model.T < 1:
        raise DimensionError("T must be >= 1")
    meas = check_measurements(model, meas)
    n = model.T * model.nx
    if 8 * n * n > max_bytes:
        raise ProblemTooLargeError(
            f"dense batch solver needs {8 * n * n / 2**30:.1f} GiB for T={model.T} "
            f"(limit {max_bytes / 2**30:.1f} GiB)")

    start = perf_counter()
    empty = ConstraintSet.empty(model.T, model.nx)
    x = batch_gauss_newton(model, empty, SplitState.zeros(empty),
                           prior_rollout(model), meas, opts.inner,
                           max_bytes=max_bytes)[-1]
    rho1, rho2 = opts.rho1, opts.rho2
    a1r1 = opts.alpha1 * rho1
    a2r2 = opts.alpha2 * rho2
    v = [np.maximum(0.0, -cons.c_at(t, x[t])) for t in range(cons.T)]
    eta = [np.zeros(int(nct)) for nct in cons.nc]
    zeta = [np.zeros(int(net)) for net in cons.ne]
    trace = ConvergenceTrace()
    scaled = method != "sbm"

    def x_update(v_cur, eta_cur, zeta_cur, warm):
        state = SplitState(v=v_cur, eta=eta_cur, zeta=zeta_cur, rho1=rho1,
                           rho2=rho2, alpha1=opts.alpha1, alpha2=opts.alpha2,
                           M=opts.M)
        return batch_gauss_newton(model, cons, state, warm, meas, opts.inner,
                                  scaled=scaled, max_bytes=max_bytes)[-1]

    for _ in range(opts.max_outer):
        x_prev = x
        if method == "sbm":
            v_cur = [a.copy() for a in v]
            for _m in range(opts.M):
                x = x_update(v_cur, eta, zeta, x)
                v_cur = [np.maximum(0.0, -cons.c_at(t, x[t]) - eta[t])
                         for t in range(cons.T)]
            v = v_cur
            eta = [eta[t] + cons.c_at(t, x[t]) + v[t] for t in range(cons.T)]
            zeta = [zeta[t] + cons.e_at(t, x[t]) for t in range(cons.T)]
        else:
            x = x_update(v, eta, zeta, x)
            if method == "admm":
                v = [np.maximum(0.0, -cons.c_at(t, x[t]) - eta[t] / rho1)
                     for t in range(cons.T)]
                eta = [eta[t] + rho1 * (cons.c_at(t, x[t]) + v[t])
                       for t in range(cons.T)]
                zeta = [zeta[t] + rho2 * cons.e_at(t, x[t])
                        for t in range(cons.T)]
            else:
                eta_half = [eta[t] + a1r1 * (cons.c_at(t, x[t]) + v[t])
                            for t in range(cons.T)]
                zeta_half = [zeta[t] + a2r2 * cons.e_at(t, x[t])
                             for t in range(cons.T)]
                v_new = []
                for t in range(cons.T):
                    eta_for_v = eta_half[t] if opts.prs_v_uses_half_multiplier else eta[t]
                    v_new.append(np.maximum(0.0, -cons.c_at(t, x[t]) - eta_for_v / rho1))
                v = v_new
                eta = [eta_half[t] + a1r1 * (cons.c_at(t, x[t]) + v[t])
                       for t in range(cons.T)]
                zeta = [zeta_half[t] + a2r2 * cons.e_at(t, x[t])
                        for t in range(cons.T)]
        if iterates_out is not None:
            iterates_out.append(x.copy())
        max_ineq, max_eq = eval_violation(cons, x)
        step = float(np.max(np.abs(x - x_prev)))
        trace.record(eval_theta(model, x, meas), max_ineq, max_eq, step,
                     perf_counter() - start)
        if step <= opts.tol_step and max_ineq <= opts.tol_violation \
                and max_eq <= opts.tol_violation:
            break

    return BatchSplitResult(trajectory=x, trace=trace, v=v, eta=eta, zeta=zeta)
