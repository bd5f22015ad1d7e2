import numpy as np
import pytest

from splitsmoother.cieks import cieks_solve, linearize_at
from splitsmoother.cks import cks_solve
from splitsmoother.models import eval_theta, prior_rollout
from splitsmoother.oracle import batch_gauss_newton
from splitsmoother.random_problems import (random_affine_problem,
                                           random_nonlinear_problem,
                                           random_split_for_cons,
                                           random_split_state)
from splitsmoother.ship import ShipExperimentConfig, ship_model, simulate
from splitsmoother.splitstate import InnerOptions, SplitState


def test_linearize_affine_is_identity():
    rng = np.random.default_rng(0)
    aff, _ = random_affine_problem(rng, T=4)
    model, cons = aff.as_nonlinear()
    traj = rng.standard_normal((4, aff.nx))
    lin = linearize_at(model, cons, traj)
    assert np.max(np.abs(lin.A - aff.A)) <= 1e-12
    assert np.max(np.abs(lin.b - aff.b)) <= 1e-12
    assert np.max(np.abs(lin.H - aff.H)) <= 1e-12
    assert np.max(np.abs(lin.g - aff.g)) <= 1e-12
    for t in range(4):
        assert lin.C[t].shape == aff.C[t].shape
        assert np.allclose(lin.C[t], aff.C[t], atol=1e-12)
        assert np.allclose(lin.d[t], aff.d[t], atol=1e-12)
        assert np.allclose(lin.f[t], aff.f[t], atol=1e-12)


def test_linearize_ship_range_row():
    cfg = ShipExperimentConfig(T=3)
    model, cons = ship_model(cfg)
    traj = np.tile(np.array([1.0, 0.0, -1.0, 1.0]), (3, 1))
    lin = linearize_at(model, cons, traj)
    assert np.allclose(lin.H[0][0], [0.0, 0.0, 0.0, 1.0], atol=1e-12)
    # offset restores h(x0) - J x0 = 1 - 1 = 0 for the first beacon
    assert lin.g[0][0] == pytest.approx(0.0, abs=1e-12)


def test_linearization_error_is_second_order():
    rng = np.random.default_rng(1)
    model, cons, _ = random_nonlinear_problem(rng, T=3)
    x0 = rng.standard_normal(model.nx)
    traj = np.tile(x0, (3, 1))
    lin = linearize_at(model, cons, traj)
    delta = 0.1 * rng.standard_normal(model.nx)

    def lin_error(d):
        truth = np.asarray(model.f(1, x0 + d))
        approx = lin.A[0] @ (x0 + d) + lin.b[0]
        return np.linalg.norm(truth - approx)

    err_full = lin_error(delta)
    err_half = lin_error(delta / 2.0)
    assert err_full / err_half >= 3.5


def test_affine_input_converges_in_one_inner_iteration():
    rng = np.random.default_rng(2)
    aff, meas = random_affine_problem(rng, T=6)
    model, cons = aff.as_nonlinear()
    split = random_split_state(rng, aff)
    iterates = []
    x = cieks_solve(model, cons, split, rng.standard_normal((6, aff.nx)), meas,
                    InnerOptions(max_inner=5), iterates_out=iterates)
    assert len(iterates) == 2   # exact step, then a confirming zero step
    assert np.max(np.abs(iterates[1] - iterates[0])) <= 1e-12
    assert np.max(np.abs(x - cks_solve(aff, split, meas))) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_iterates_match_dense_gauss_newton(seed):
    rng = np.random.default_rng(40 + seed)
    model, cons, meas = random_nonlinear_problem(rng, T=10)
    split = random_split_for_cons(rng, cons)
    init = np.tile(model.m1, (model.T, 1))
    opts = InnerOptions(max_inner=8)
    smoother_iters = []
    cieks_solve(model, cons, split, init, meas, opts,
                iterates_out=smoother_iters)
    dense_iters = batch_gauss_newton(model, cons, split, init, meas, opts)
    assert len(smoother_iters) == len(dense_iters)
    for a, b in zip(smoother_iters, dense_iters):
        assert np.max(np.abs(a - b)) <= 1e-8


def test_ship_subproblem_steps_contract():
    cfg = ShipExperimentConfig(seed=0)
    model, cons = ship_model(cfg)
    meas = simulate(cfg)
    split = SplitState.zeros(cons, rho1=1.0)
    iterates = []
    cieks_solve(model, cons, split, prior_rollout(model), meas,
                InnerOptions(max_inner=20), iterates_out=iterates)
    steps = [np.max(np.abs(b - a)) for a, b in zip(iterates, iterates[1:])]
    # the step sizes shrink steadily even when 20 iterations are not enough
    # to hit the inner tolerance from a cold start
    assert steps[-1] < 0.1 * steps[0]
    assert all(np.isfinite(s) for s in steps)


def test_final_objective_not_worse_than_initial_on_ship():
    cfg = ShipExperimentConfig(seed=3)
    model, cons = ship_model(cfg)
    meas = simulate(cfg)
    split = SplitState.zeros(cons, rho1=1.0)
    init = prior_rollout(model)
    final = cieks_solve(model, cons, split, init, meas, InnerOptions(max_inner=20))

    def penalized(traj):
        obj = eval_theta(model, traj, meas)
        for t in range(cons.T):
            r = cons.c_at(t, traj[t]) + split.v[t] + split.eta[t] / split.rho1
            obj += 0.5 * split.rho1 * float(r @ r)
        return obj

    assert penalized(final) <= penalized(init)
