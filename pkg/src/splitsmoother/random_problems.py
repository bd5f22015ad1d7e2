"""Random problem generators for cross-validation and property tests."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .cks import AffineModel
from .models import ConstraintSet, NonlinearModel
from .splitstate import SplitState


def random_spd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    W = rng.standard_normal((n, n))
    return scale * (W @ W.T / n + np.eye(n))


def random_affine_problem(rng: np.random.Generator, *, T: int = 10,
                          nx: Optional[int] = None, ny: Optional[int] = None,
                          with_ineq: bool = True, with_eq: bool = True,
                          ) -> tuple[AffineModel, np.ndarray]:
    """Well-conditioned random affine model with mixed constraint blocks.

    Returns the model and a random measurement sequence.  Constraint block
    sizes vary per step and may be zero.
    """
    nx = nx or int(rng.integers(2, 5))
    ny = ny or int(rng.integers(1, 4))
    A = np.empty((T - 1, nx, nx))
    for t in range(T - 1):
        Araw = rng.standard_normal((nx, nx))
        A[t] = 0.9 * Araw / max(1.0, np.linalg.norm(Araw, 2))
    b = 0.3 * rng.standard_normal((T - 1, nx))
    H = rng.standard_normal((T, ny, nx))
    g = 0.3 * rng.standard_normal((T, ny))
    C, d, E, f = [], [], [], []
    for t in range(T):
        nc = int(rng.integers(0, 3)) if with_ineq else 0
        ne = int(rng.integers(0, 2)) if with_eq else 0
        C.append(rng.standard_normal((nc, nx)))
        d.append(rng.standard_normal(nc))
        E.append(rng.standard_normal((ne, nx)))
        f.append(rng.standard_normal(ne))
    aff = AffineModel(
        T=T, nx=nx, ny=ny, A=A, b=b, H=H, g=g, C=C, d=d, E=E, f=f,
        Q=random_spd(rng, nx), R=random_spd(rng, ny),
        m1=rng.standard_normal(nx), P1=random_spd(rng, nx),
    )
    meas = rng.standard_normal((T, ny))
    return aff, meas


def _smooth_func(A: np.ndarray, b: np.ndarray, W: np.ndarray, w0: np.ndarray,
                 eps: float):
    """Affine map perturbed by a bounded smooth nonlinearity, with Jacobian."""

    def func(x):
        return A @ x + b + eps * np.tanh(W @ x + w0)

    def jac(x):
        sech2 = 1.0 - np.tanh(W @ x + w0) ** 2
        return A + eps * (sech2[:, None] * W)

    return func, jac


def random_nonlinear_problem(rng: np.random.Generator, *, T: int = 10,
                             nx: int = 3, ny: int = 2,
                             nc: int = 1, ne: int = 0, eps: float = 0.2,
                             ) -> tuple[NonlinearModel, ConstraintSet, np.ndarray]:
    """Mildly nonlinear model with analytic Jacobians everywhere."""
    Araw = rng.standard_normal((nx, nx))
    A = 0.9 * Araw / max(1.0, np.linalg.norm(Araw, 2))
    f, jf = _smooth_func(A, 0.2 * rng.standard_normal(nx),
                         rng.standard_normal((nx, nx)),
                         rng.standard_normal(nx), eps)
    h, jh = _smooth_func(rng.standard_normal((ny, nx)),
                         0.2 * rng.standard_normal(ny),
                         rng.standard_normal((ny, nx)),
                         rng.standard_normal(ny), eps)
    model = NonlinearModel(
        T=T, nx=nx, ny=ny,
        f=lambda t, x: f(x), h=lambda t, x: h(x),
        Q=random_spd(rng, nx), R=random_spd(rng, ny),
        m1=rng.standard_normal(nx), P1=random_spd(rng, nx),
        jac_f=lambda t, x: jf(x), jac_h=lambda t, x: jh(x),
    )
    c, jc = _smooth_func(rng.standard_normal((nc, nx)), rng.standard_normal(nc),
                         rng.standard_normal((nc, nx)), rng.standard_normal(nc),
                         eps)
    e, je = _smooth_func(rng.standard_normal((ne, nx)), rng.standard_normal(ne),
                         rng.standard_normal((ne, nx)), rng.standard_normal(ne),
                         eps)
    cons = ConstraintSet(
        T=T, nx=nx,
        nc=np.full(T, nc, dtype=int), ne=np.full(T, ne, dtype=int),
        c=(lambda t, x: c(x)) if nc else None,
        e=(lambda t, x: e(x)) if ne else None,
        jac_c=(lambda t, x: jc(x)) if nc else None,
        jac_e=(lambda t, x: je(x)) if ne else None,
    )
    meas = rng.standard_normal((T, ny))
    return model, cons, meas


def random_split_state(rng: np.random.Generator, aff: AffineModel, *,
                       rho1: float = 1.0, rho2: float = 1.0) -> SplitState:
    """Random nonnegative v with random multipliers, matched to the blocks."""
    return SplitState(
        v=[np.abs(rng.standard_normal(aff.nc(t))) for t in range(aff.T)],
        eta=[rng.standard_normal(aff.nc(t)) for t in range(aff.T)],
        zeta=[rng.standard_normal(aff.ne(t)) for t in range(aff.T)],
        rho1=rho1, rho2=rho2,
    )


def random_split_for_cons(rng: np.random.Generator, cons: ConstraintSet, *,
                          rho1: float = 1.0, rho2: float = 1.0) -> SplitState:
    return SplitState(
        v=[np.abs(rng.standard_normal(int(n))) for n in cons.nc],
        eta=[rng.standard_normal(int(n)) for n in cons.nc],
        zeta=[rng.standard_normal(int(n)) for n in cons.ne],
        rho1=rho1, rho2=rho2,
    )
