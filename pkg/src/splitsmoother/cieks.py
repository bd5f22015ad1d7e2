"""Constrained iterated extended Kalman smoother.

Solves the nonlinear x-subproblem by repeatedly linearizing the model and
constraint functions around the current iterate and solving the resulting
affine subproblem with the constrained Kalman smoother.  This is constrained
Gauss-Newton carried out through the Markov structure of the model.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from .cks import AffineModel, cks_solve
from .exceptions import NumericalError
from .models import ConstraintSet, NonlinearModel, check_trajectory
from .splitstate import InnerOptions, SplitState


def linearize_at(model: NonlinearModel, cons: ConstraintSet,
                 traj: np.ndarray) -> AffineModel:
    """First-order expansion of all model/constraint functions at ``traj``.

    Each function phi is replaced by ``J_phi(x0) x + (phi(x0) - J_phi(x0) x0)``
    with x0 the trajectory point at the step where phi applies (the previous
    step for the transition).
    """
    traj = check_trajectory(model, traj)
    T, nx, ny = model.T, model.nx, model.ny

    jf, jh = model.jf, model.jh
    model_f, model_h = model.f, model.h
    jc_at, je_at = cons.jc_at, cons.je_at
    c_at, e_at = cons.c_at, cons.e_at

    A = np.empty((T - 1, nx, nx))
    b = np.empty((T - 1, nx))
    for t in range(1, T):
        x0 = traj[t - 1]
        J = jf(t, x0)
        A[t - 1] = J
        b[t - 1] = np.asarray(model_f(t, x0), dtype=float) - J @ x0

    H = np.empty((T, ny, nx))
    g = np.empty((T, ny))
    C, d, E, f = [], [], [], []
    for t in range(T):
        x0 = traj[t]
        J = jh(t, x0)
        H[t] = J
        g[t] = np.asarray(model_h(t, x0), dtype=float) - J @ x0
        Jc = jc_at(t, x0)
        C.append(Jc)
        d.append(c_at(t, x0) - Jc @ x0)
        Je = je_at(t, x0)
        E.append(Je)
        f.append(e_at(t, x0) - Je @ x0)

    for name, arr in (("A", A), ("H", H)):
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite entries in linearized {name}")

    return AffineModel(T=T, nx=nx, ny=ny, A=A, b=b, H=H, g=g,
                       C=C, d=d, E=E, f=f,
                       Q=model.Q, R=model.R, m1=model.m1, P1=model.P1)


def cieks_solve(model: NonlinearModel, cons: ConstraintSet, split: SplitState,
                init: np.ndarray, meas: np.ndarray,
                opts: Optional[InnerOptions] = None,
                scaled: bool = True,
                iterates_out: Optional[List[np.ndarray]] = None) -> np.ndarray:
    """Gauss-Newton loop: linearize, solve with CKS, repeat.

    Stops when the sup-norm step falls below ``opts.tol_inner`` or after
    ``opts.max_inner`` iterations; returns the last iterate.  ``iterates_out``
    collects every produced iterate (for cross-validation against the dense
    path).
    """
    opts = opts or InnerOptions()
    x = check_trajectory(model, init)
    for i in range(opts.max_inner):
        aff = linearize_at(model, cons, x)
        x_new = cks_solve(aff, split, meas, scaled=scaled)
        if not np.all(np.isfinite(x_new)):
            raise NumericalError(f"divergent inner iterate at iteration {i}")
        if iterates_out is not None:
            iterates_out.append(x_new.copy())
        step = float(np.max(np.abs(x_new - x)))
        x = x_new
        if step <= opts.tol_inner:
            break
    return x
