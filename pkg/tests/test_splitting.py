import dataclasses

import numpy as np
import pytest

from splitsmoother.models import ConstraintSet, eval_violation
from splitsmoother.oracle import batch_split_solve
from splitsmoother.random_problems import random_affine_problem
from splitsmoother.splitstate import SolveOptions, SplitState
from splitsmoother.splitting import admm_step, prs_step, sbm_step, solve


def scalar_cons(cvals, evals=None):
    """ConstraintSet over T=1, nx=1 returning fixed values regardless of x."""
    cvals = np.asarray(cvals, dtype=float)
    evals = np.zeros(0) if evals is None else np.asarray(evals, dtype=float)
    return ConstraintSet(
        T=1, nx=1, nc=np.array([cvals.size]), ne=np.array([evals.size]),
        c=lambda t, x: cvals.copy(), e=lambda t, x: evals.copy(),
    )


class TestAdmmStep:
    def test_active_constraint(self):
        # c = 0.5 > 0: v clips to 0, multiplier absorbs the full violation
        cons = scalar_cons([0.5])
        split = SplitState(v=[np.array([0.2])], eta=[np.array([0.0])],
                           zeta=[np.zeros(0)], rho1=2.0)
        out = admm_step(split, np.zeros((1, 1)), cons)
        assert out.v[0][0] == pytest.approx(0.0)
        assert out.eta[0][0] == pytest.approx(1.0)   # 0 + 2*(0.5 + 0)

    def test_inactive_constraint(self):
        # c = -1, eta = 0: v = 1 restores c + v = 0 and eta stays zero
        cons = scalar_cons([-1.0])
        split = SplitState(v=[np.array([0.0])], eta=[np.array([0.0])],
                           zeta=[np.zeros(0)], rho1=3.0)
        out = admm_step(split, np.zeros((1, 1)), cons)
        assert out.v[0][0] == pytest.approx(1.0)
        assert out.eta[0][0] == pytest.approx(0.0)

    def test_equality_multiplier(self):
        cons = scalar_cons([], evals=[0.3])
        split = SplitState(v=[np.zeros(0)], eta=[np.zeros(0)],
                           zeta=[np.array([1.0])], rho2=2.0)
        out = admm_step(split, np.zeros((1, 1)), cons)
        assert out.zeta[0][0] == pytest.approx(1.6)   # 1 + 2*0.3


class TestPrsStep:
    def test_two_multiplier_moves(self):
        # c = 0.5, v_old = 0.1, eta = 0, rho1 = 2, alpha1 = 0.5:
        # eta_half = 0 + 1*(0.5+0.1) = 0.6; v = max(0, -0.5 - 0/2) = 0;
        # eta_full = 0.6 + 1*(0.5+0) = 1.1
        cons = scalar_cons([0.5])
        split = SplitState(v=[np.array([0.1])], eta=[np.array([0.0])],
                           zeta=[np.zeros(0)], rho1=2.0, alpha1=0.5)
        out = prs_step(split, np.zeros((1, 1)), cons)
        assert out.v[0][0] == pytest.approx(0.0)
        assert out.eta[0][0] == pytest.approx(1.1)

    def test_half_multiplier_variant_changes_v(self):
        # with eta_half = 0.6 the v-update sees -(-0.4) - 0.6/2 = 0.1
        cons = scalar_cons([-0.4])
        split = SplitState(v=[np.array([0.0])], eta=[np.array([1.0])],
                           zeta=[np.zeros(0)], rho1=2.0, alpha1=0.5)
        default = prs_step(split, np.zeros((1, 1)), cons)
        variant = prs_step(split, np.zeros((1, 1)), cons,
                           v_uses_half_multiplier=True)
        assert default.v[0][0] == pytest.approx(0.0)   # 0.4 - 1/2 = -0.1 -> clip
        eta_half = 1.0 + 1.0 * (-0.4 + 0.0)            # = 0.6
        assert variant.v[0][0] == pytest.approx(0.4 - eta_half / 2.0)

    def test_equality_double_relaxed_step(self):
        cons = scalar_cons([], evals=[0.2])
        split = SplitState(v=[np.zeros(0)], eta=[np.zeros(0)],
                           zeta=[np.array([0.0])], rho2=4.0, alpha2=0.5)
        out = prs_step(split, np.zeros((1, 1)), cons)
        assert out.zeta[0][0] == pytest.approx(0.8)   # two moves of 0.5*4*0.2


class TestSbmStep:
    def test_single_repetition_hand_example(self):
        # x fixed by a trivial solver, c = -1, eta = 0.3:
        # v = max(0, 1 - 0.3) = 0.7; eta_new = 0.3 + (-1 + 0.7) = 0.0
        cons = scalar_cons([-1.0])
        split = SplitState(v=[np.array([0.0])], eta=[np.array([0.3])],
                           zeta=[np.zeros(0)], M=1)
        out, x = sbm_step(split, lambda s, warm: warm, cons, np.zeros((1, 1)))
        assert out.v[0][0] == pytest.approx(0.7)
        assert out.eta[0][0] == pytest.approx(0.0)
        assert np.all(x == 0.0)

    def test_inner_repetitions_counted(self):
        calls = []
        cons = scalar_cons([-1.0])
        split = SplitState(v=[np.array([0.0])], eta=[np.array([0.0])],
                           zeta=[np.zeros(0)], M=3)

        def solver(state, warm):
            calls.append([v.copy() for v in state.v])
            return warm

        sbm_step(split, solver, cons, np.zeros((1, 1)))
        assert len(calls) == 3
        # after the first repetition v settles at 1, so repeats see it
        assert calls[1][0][0] == pytest.approx(1.0)


@pytest.mark.parametrize("method", ["admm", "prs", "sbm"])
def test_iterates_match_dense_batch(method):
    rng = np.random.default_rng(8)
    aff, meas = random_affine_problem(rng, T=3)
    model, cons = aff.as_nonlinear()
    opts = SolveOptions(method=method, max_outer=8, tol_step=0.0)
    smoother_iters, dense_iters = [], []
    solve(model, cons, meas, opts, iterates_out=smoother_iters)
    batch_split_solve(method, model, cons, meas, opts, iterates_out=dense_iters)
    assert len(smoother_iters) == len(dense_iters) == 8
    for a, b in zip(smoother_iters, dense_iters):
        assert np.max(np.abs(a - b)) <= 1e-10


def test_sbm_single_inner_unit_penalty_equals_admm():
    rng = np.random.default_rng(21)
    aff, meas = random_affine_problem(rng, T=5)
    model, cons = aff.as_nonlinear()
    kw = dict(max_outer=12, tol_step=0.0, rho1=1.0, rho2=1.0)
    admm_iters, sbm_iters = [], []
    solve(model, cons, meas, SolveOptions(method="admm", **kw),
          iterates_out=admm_iters)
    solve(model, cons, meas, SolveOptions(method="sbm", M=1, **kw),
          iterates_out=sbm_iters)
    for a, b in zip(admm_iters, sbm_iters):
        assert np.max(np.abs(a - b)) <= 1e-10


def test_zero_outer_iterations_returns_initialization():
    rng = np.random.default_rng(4)
    aff, meas = random_affine_problem(rng, T=4)
    model, cons = aff.as_nonlinear()
    res = solve(model, cons, meas, SolveOptions(max_outer=0))
    assert np.all(res.trajectory == res.initial)
    assert len(res.trace) == 0
    # v is initialized from the unconstrained estimate's slack
    for t in range(cons.T):
        expect = np.maximum(0.0, -cons.c_at(t, res.initial[t]))
        assert np.allclose(res.split.v[t], expect)


@pytest.mark.parametrize("method", ["admm", "prs", "sbm"])
def test_auxiliary_variables_stay_nonnegative(method):
    rng = np.random.default_rng(31)
    aff, meas = random_affine_problem(rng, T=6)
    model, cons = aff.as_nonlinear()
    res = solve(model, cons, meas, SolveOptions(method=method, max_outer=15,
                                                tol_step=0.0))
    for v in res.split.v:
        assert np.all(v >= 0.0)


def _anchored_feasible(rng, T=8):
    """Affine instance whose constraints are satisfiable by construction.

    Offsets are re-anchored so a random point satisfies every block with
    slack, ruling out jointly infeasible random draws.
    """
    aff, meas = random_affine_problem(rng, T=T)
    d, f = [], []
    for t in range(T):
        anchor = rng.standard_normal(aff.nx)
        slack = 0.1 + np.abs(rng.standard_normal(aff.nc(t)))
        d.append(-aff.C[t] @ anchor - slack)
        f.append(-aff.E[t] @ anchor)
    return dataclasses.replace(aff, d=d, f=f), meas


@pytest.mark.parametrize("method", ["admm", "prs", "sbm"])
def test_affine_problems_become_feasible(method):
    rng = np.random.default_rng(13)
    hit = 0
    for _ in range(3):
        aff, meas = _anchored_feasible(rng)
        model, cons = aff.as_nonlinear()
        res = solve(model, cons, meas, SolveOptions(method=method,
                                                    max_outer=300))
        max_ineq, max_eq = eval_violation(cons, res.trajectory)
        if max_ineq <= 1e-6 and max_eq <= 1e-6:
            hit += 1
    assert hit == 3


def test_admm_fixed_point_satisfies_complementarity():
    rng = np.random.default_rng(55)
    aff, meas = random_affine_problem(rng, T=8, with_eq=False)
    model, cons = aff.as_nonlinear()
    res = solve(model, cons, meas, SolveOptions(method="admm", max_outer=400))
    for t in range(cons.T):
        cval = cons.c_at(t, res.trajectory[t])
        eta = res.split.eta[t]
        assert np.all(eta >= -1e-6)            # sign of the multiplier
        assert np.max(np.abs(eta * cval)) <= 1e-4 if eta.size else True
