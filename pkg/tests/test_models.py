import numpy as np
import pytest

from splitsmoother.exceptions import DimensionError, NumericalError
from splitsmoother.models import (ConstraintSet, NonlinearModel, constant_model,
                                  eval_theta, eval_violation,
                                  finite_diff_jacobian, validate_jacobians)
from splitsmoother.random_problems import random_affine_problem
from splitsmoother.ship import ShipExperimentConfig, ship_model, ship_truth


def dense_theta(model, traj, meas):
    """Independent brute-force cost: explicit inverses and quadratic forms."""
    total = 0.0
    r0 = traj[0] - model.m1
    total += 0.5 * r0 @ np.linalg.inv(model.P1) @ r0
    for t in range(model.T):
        r = meas[t] - model.h(t, traj[t])
        total += 0.5 * r @ np.linalg.inv(model.R_at(t)) @ r
    for t in range(1, model.T):
        r = traj[t] - model.f(t, traj[t - 1])
        total += 0.5 * r @ np.linalg.inv(model.Q_at(t)) @ r
    return total


def test_theta_zero_at_exact_affine_fit():
    m1 = np.array([0.3, -0.7])
    H = np.array([[1.0, 2.0]])
    g = np.array([0.5])
    model = constant_model(1, 2, 1, f=lambda x: x, h=lambda x: H @ x + g,
                           Q=np.eye(2), R=np.eye(1), m1=m1, P1=np.eye(2))
    meas = (H @ m1 + g)[None, :]
    assert eval_theta(model, m1[None, :], meas) == pytest.approx(0.0, abs=1e-15)


def test_theta_matches_dense_oracle_random_affine():
    rng = np.random.default_rng(42)
    for _ in range(5):
        aff, meas = random_affine_problem(rng, T=3)
        model, _ = aff.as_nonlinear()
        traj = rng.standard_normal((3, aff.nx))
        expected = dense_theta(model, traj, meas)
        assert eval_theta(model, traj, meas) == pytest.approx(expected, rel=1e-12)


def test_theta_ship_truth_noiseless_is_transition_term_only():
    cfg = ShipExperimentConfig(T=100)
    model, _ = ship_model(cfg)
    truth = ship_truth(cfg)
    meas = np.array([model.h(t, truth[t]) for t in range(cfg.T)])
    # measurement and prior residuals vanish by construction; the remaining
    # transition residuals are the discretization mismatch of the truth curve
    expected = dense_theta(model, truth, meas)
    got = eval_theta(model, truth, meas)
    assert got == pytest.approx(expected, rel=1e-10)
    assert got > 0.0
    prior_meas_only = 0.5 * (truth[0] - model.m1) @ np.linalg.inv(model.P1) \
        @ (truth[0] - model.m1)
    assert prior_meas_only == pytest.approx(0.0, abs=1e-20)


def test_theta_rejects_bad_shapes():
    model = constant_model(3, 2, 1, f=lambda x: x, h=lambda x: x[:1],
                           Q=np.eye(2), R=np.eye(1),
                           m1=np.zeros(2), P1=np.eye(2))
    with pytest.raises(DimensionError):
        eval_theta(model, np.zeros((2, 2)), np.zeros((3, 1)))
    with pytest.raises(DimensionError):
        eval_theta(model, np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(NumericalError):
        eval_theta(model, np.full((3, 2), np.nan), np.zeros((3, 1)))


def test_violation_strictly_feasible_is_zero():
    cons = ConstraintSet.constant(4, 2, nc=1, c=lambda x: np.array([-1.0 - x[0] ** 2]))
    assert eval_violation(cons, np.zeros((4, 2))) == (0.0, 0.0)


def test_violation_ship_truth_has_margin():
    cfg = ShipExperimentConfig(T=50)
    _, cons = ship_model(cfg)
    truth = ship_truth(cfg)
    max_ineq, max_eq = eval_violation(cons, truth)
    assert max_ineq == 0.0
    assert max_eq == 0.0
    # the bound sits exactly 0.05 below the truth at every step
    cvals = [cons.c_at(t, truth[t])[0] for t in range(cfg.T)]
    assert np.allclose(cvals, -0.05, atol=1e-12)


def test_violation_componentwise():
    cons = ConstraintSet(
        T=1, nx=2, nc=np.array([2]), ne=np.array([1]),
        c=lambda t, x: np.array([0.3, -0.1]),
        e=lambda t, x: np.array([-0.2]),
    )
    max_ineq, max_eq = eval_violation(cons, np.zeros((1, 2)))
    assert max_ineq == pytest.approx(0.3)
    assert max_eq == pytest.approx(0.2)


def test_finite_diff_affine_exact():
    A = np.array([[1.0, -2.0, 0.5], [3.0, 0.0, 1.0]])
    b = np.array([0.1, -0.4])
    J = finite_diff_jacobian(lambda x: A @ x + b, np.array([0.3, -1.2, 2.0]))
    assert np.max(np.abs(J - A)) <= 1e-10


def test_finite_diff_quadratic():
    J = finite_diff_jacobian(lambda x: np.array([x[0] ** 2, x[0] * x[1]]),
                             np.array([1.0, 2.0]), h=1e-5)
    assert np.allclose(J, [[2.0, 0.0], [2.0, 1.0]], atol=1e-6)


def test_finite_diff_ship_range_gradient():
    cfg = ShipExperimentConfig()
    model, _ = ship_model(cfg)
    x = np.array([1.0, 0.0, -1.0, 1.0])
    J = finite_diff_jacobian(lambda z: model.h(0, z), x)
    assert np.allclose(J[0], [0.0, 0.0, 0.0, 1.0], atol=1e-6)


def test_finite_diff_rejects_nonfinite():
    with pytest.raises(NumericalError):
        finite_diff_jacobian(lambda x: np.array([np.log(x[0])]), np.array([0.0]))


def test_validate_jacobians_accepts_ship_and_rejects_wrong():
    cfg = ShipExperimentConfig()
    model, cons = ship_model(cfg)
    validate_jacobians(model, cons)

    bad = NonlinearModel(
        T=model.T, nx=4, ny=2, f=model.f, h=model.h, Q=model.Q, R=model.R,
        m1=model.m1, P1=model.P1,
        jac_f=model.jac_f,
        jac_h=lambda t, x: np.zeros((2, 4)),
    )
    with pytest.raises(NumericalError):
        validate_jacobians(bad)


def test_spd_enforced_at_construction():
    with pytest.raises(NumericalError):
        constant_model(2, 2, 1, f=lambda x: x, h=lambda x: x[:1],
                       Q=np.diag([1.0, -1.0]), R=np.eye(1),
                       m1=np.zeros(2), P1=np.eye(2))
