"""Outer variable-splitting loops: ADMM, Peaceman-Rachford, split Bregman.

The x-update is delegated to the (iterated extended) constrained Kalman
smoother; the auxiliary-variable and multiplier updates are closed-form and
applied per time step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .cieks import cieks_solve
from .models import (ConstraintSet, NonlinearModel, check_measurements,
                     eval_theta, eval_violation, prior_rollout)
from .splitstate import ConvergenceTrace, SolveOptions, SplitState

__all__ = ["admm_step", "prs_step", "sbm_step", "solve", "SolveResult",
           "SplitState", "ConvergenceTrace", "SolveOptions"]


def admm_step(split: SplitState, x_new: np.ndarray,
              cons: ConstraintSet) -> SplitState:
    """ADMM auxiliary/multiplier updates after an x-update.

    Per step: ``v = max(0, -c(x) - eta/rho1)``, then
    ``eta += rho1 (c(x) + v)`` using the updated v, and
    ``zeta += rho2 e(x)``.
    """
    v_new, eta_new, zeta_new = [], [], []
    for t in range(cons.T):
        cval = cons.c_at(t, x_new[t])
        v = np.maximum(0.0, -cval - split.eta[t] / split.rho1)
        v_new.append(v)
        eta_new.append(split.eta[t] + split.rho1 * (cval + v))
        zeta_new.append(split.zeta[t] + split.rho2 * cons.e_at(t, x_new[t]))
    return split.copy_with(v=v_new, eta=eta_new, zeta=zeta_new)


def prs_step(split: SplitState, x_new: np.ndarray, cons: ConstraintSet,
             v_uses_half_multiplier: bool = False) -> SplitState:
    """Peaceman-Rachford update: the multipliers move twice per iteration.

    Half-step multipliers use the previous v; the v-update by default uses the
    original multiplier (``v_uses_half_multiplier=True`` switches it to the
    half-step one); the full-step multipliers use the updated v.
    """
    a1r1 = split.alpha1 * split.rho1
    a2r2 = split.alpha2 * split.rho2
    v_new, eta_new, zeta_new = [], [], []
    for t in range(cons.T):
        cval = cons.c_at(t, x_new[t])
        eval_ = cons.e_at(t, x_new[t])
        eta_half = split.eta[t] + a1r1 * (cval + split.v[t])
        zeta_half = split.zeta[t] + a2r2 * eval_
        eta_for_v = eta_half if v_uses_half_multiplier else split.eta[t]
        v = np.maximum(0.0, -cval - eta_for_v / split.rho1)
        v_new.append(v)
        eta_new.append(eta_half + a1r1 * (cval + v))
        zeta_new.append(zeta_half + a2r2 * eval_)
    return split.copy_with(v=v_new, eta=eta_new, zeta=zeta_new)


def sbm_step(split: SplitState, solver: Callable[[SplitState, np.ndarray], np.ndarray],
             cons: ConstraintSet, x_warm: np.ndarray) -> tuple[SplitState, np.ndarray]:
    """Split Bregman outer step.

    Repeats ``M`` times: x-update (whose penalty terms carry the multipliers
    unscaled) followed by ``v = max(0, -c(x) - eta)``; afterwards the
    multipliers absorb the residual once: ``eta += c(x) + v``,
    ``zeta += e(x)``.  ``solver`` maps (split, warm start) to the x-minimizer.
    """
    x = x_warm
    v_cur = [v.copy() for v in split.v]
    for _ in range(split.M):
        work = split.copy_with(v=v_cur)
        x = solver(work, x)
        v_cur = [np.maximum(0.0, -cons.c_at(t, x[t]) - split.eta[t])
                 for t in range(cons.T)]
    eta_new = [split.eta[t] + cons.c_at(t, x[t]) + v_cur[t]
               for t in range(cons.T)]
    zeta_new = [split.zeta[t] + cons.e_at(t, x[t]) for t in range(cons.T)]
    return split.copy_with(v=v_cur, eta=eta_new, zeta=zeta_new), x


@dataclass
class SolveResult:
    trajectory: np.ndarray
    split: SplitState
    trace: ConvergenceTrace
    initial: np.ndarray   # unconstrained warm-start trajectory


def unconstrained_estimate(model: NonlinearModel, meas: np.ndarray,
                           opts: Optional[SolveOptions] = None) -> np.ndarray:
    """IEKS solution with all constraint blocks disabled, from a prior rollout."""
    opts = opts or SolveOptions()
    empty = ConstraintSet.empty(model.T, model.nx)
    free = SplitState.zeros(empty)
    return cieks_solve(model, empty, free, prior_rollout(model), meas, opts.inner)


def solve(model: NonlinearModel, cons: ConstraintSet, meas: np.ndarray,
          opts: Optional[SolveOptions] = None,
          iterates_out: Optional[List[np.ndarray]] = None) -> SolveResult:
    """Run the chosen splitting method on a constrained estimation problem.

    Initialization: x from the unconstrained smoother, ``v = max(0, -c(x))``,
    zero multipliers.  Each outer iteration performs the method's x-update
    (warm-started from the previous outer x) followed by its multiplier step,
    and records cost, violation, step norm, and cumulative wall time.
    """
    opts = opts or SolveOptions()
    meas = check_measurements(model, meas)

    start = time.perf_counter()
    x = unconstrained_estimate(model, meas, opts)
    split = SplitState.zeros(cons, rho1=opts.rho1, rho2=opts.rho2,
                             alpha1=opts.alpha1, alpha2=opts.alpha2, M=opts.M)
    split = split.copy_with(v=[np.maximum(0.0, -cons.c_at(t, x[t]))
                               for t in range(cons.T)])
    initial = x.copy()
    trace = ConvergenceTrace()

    scaled = opts.method != "sbm"

    def x_update(state: SplitState, warm: np.ndarray) -> np.ndarray:
        return cieks_solve(model, cons, state, warm, meas, opts.inner,
                           scaled=scaled)

    for _ in range(opts.max_outer):
        x_prev = x
        if opts.method == "sbm":
            split, x = sbm_step(split, x_update, cons, x)
        else:
            x = x_update(split, x)
            if opts.method == "admm":
                split = admm_step(split, x, cons)
            else:
                split = prs_step(split, x, cons,
                                 v_uses_half_multiplier=opts.prs_v_uses_half_multiplier)
        if iterates_out is not None:
            iterates_out.append(x.copy())
        max_ineq, max_eq = eval_violation(cons, x)
        step = float(np.max(np.abs(x - x_prev)))
        trace.record(eval_theta(model, x, meas), max_ineq, max_eq, step,
                     time.perf_counter() - start)
        if step <= opts.tol_step and max_ineq <= opts.tol_violation \
                and max_eq <= opts.tol_violation:
            break

    return SolveResult(trajectory=x, split=split, trace=trace, initial=initial)
