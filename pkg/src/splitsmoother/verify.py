"""Built-in oracle-equivalence checks, exposed through the ``verify`` CLI command.

Each check cross-validates the smoother path against the independent dense
batch path on freshly generated random instances and reports pass/fail.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .cks import cks_solve
from .cieks import cieks_solve
from .models import eval_theta, finite_diff_jacobian
from .oracle import (batch_gauss_newton, batch_qp_solve, batch_split_solve,
                     batch_theta_grad)
from .random_problems import (random_affine_problem, random_nonlinear_problem,
                              random_split_for_cons, random_split_state)
from .splitstate import InnerOptions, SolveOptions, SplitState
from .splitting import solve


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_affine_oracle(rng) -> CheckResult:
    worst = 0.0
    for _ in range(25):
        aff, meas = random_affine_problem(rng, T=10)
        split = random_split_state(rng, aff)
        diff = np.max(np.abs(cks_solve(aff, split, meas)
                             - batch_qp_solve(aff, split, meas)))
        worst = max(worst, float(diff))
    return CheckResult("cks vs dense QP (25 random affine, T=10)",
                       worst <= 1e-8, f"max diff {worst:.2e} (tol 1e-8)")


def _check_gauss_newton(rng) -> CheckResult:
    worst = 0.0
    opts = InnerOptions(max_inner=10)
    for _ in range(5):
        model, cons, meas = random_nonlinear_problem(rng, T=10)
        split = random_split_for_cons(rng, cons)
        init = np.tile(model.m1, (model.T, 1))
        smoother_iters: List[np.ndarray] = []
        cieks_solve(model, cons, split, init, meas, opts,
                    iterates_out=smoother_iters)
        dense_iters = batch_gauss_newton(model, cons, split, init, meas, opts)
        if len(smoother_iters) != len(dense_iters):
            return CheckResult("cieks vs dense Gauss-Newton", False,
                               "iterate counts differ")
        for a, b in zip(smoother_iters, dense_iters):
            worst = max(worst, float(np.max(np.abs(a - b))))
    return CheckResult("cieks vs dense Gauss-Newton (5 random nonlinear, T=10)",
                       worst <= 1e-8, f"max iterate diff {worst:.2e} (tol 1e-8)")


def _check_splitting(rng) -> CheckResult:
    worst = 0.0
    for method in ("admm", "prs", "sbm"):
        aff, meas = random_affine_problem(rng, T=3)
        model, cons = aff.as_nonlinear()
        opts = SolveOptions(method=method, max_outer=10, tol_step=0.0)
        smoother_iters: List[np.ndarray] = []
        solve(model, cons, meas, opts, iterates_out=smoother_iters)
        dense_iters: List[np.ndarray] = []
        batch_split_solve(method, model, cons, meas, opts,
                          iterates_out=dense_iters)
        for a, b in zip(smoother_iters, dense_iters):
            worst = max(worst, float(np.max(np.abs(a - b))))
    return CheckResult("splitting loop vs dense batch (T=3 affine, 3 methods)",
                       worst <= 1e-10, f"max diff {worst:.2e} (tol 1e-10)")


def _check_gradient(rng) -> CheckResult:
    worst = 0.0
    for _ in range(10):
        model, _, meas = random_nonlinear_problem(rng, T=5)
        traj = rng.standard_normal((model.T, model.nx))
        grad = batch_theta_grad(model, traj, meas)
        fd = finite_diff_jacobian(
            lambda flat: np.array([eval_theta(model, flat.reshape(model.T, model.nx),
                                              meas)]),
            traj.ravel()).ravel()
        rel = float(np.max(np.abs(grad - fd)) / max(1.0, np.max(np.abs(fd))))
        worst = max(worst, rel)
    return CheckResult("cost gradient vs finite differences (10 random points)",
                       worst <= 1e-5, f"max rel err {worst:.2e} (tol 1e-5)")


def run_all(seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    checks: List[Callable] = [_check_affine_oracle, _check_gauss_newton,
                              _check_splitting, _check_gradient]
    return [check(rng) for check in checks]
