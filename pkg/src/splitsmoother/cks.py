"""Constrained Kalman smoother for affine models.

Solves the quadratic x-subproblem of the splitting iterations exactly by
augmenting the affine state-space model with pseudo-measurements that encode
the penalty terms, then running a Kalman filter followed by a
Rauch-Tung-Striebel backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .exceptions import DimensionError, NumericalError
from .models import ConstraintSet, NonlinearModel, _cov_at
from .splitstate import SplitState


@dataclass(frozen=True)
class AffineModel:
    """Affine state-space model with affine constraint blocks.

    ``x_t = A_t x_{t-1} + b_t + q_t`` (``A[t-1]`` stores the transition into
    step ``t``), ``y_t = H_t x_t + g_t + r_t``; inequality blocks
    ``C_t x + d_t`` and equality blocks ``E_t x + f_t`` are ragged lists (one
    possibly-empty matrix per step).  Covariances follow the
    :class:`~splitsmoother.models.NonlinearModel` conventions.
    """

    T: int
    nx: int
    ny: int
    A: np.ndarray          # (T-1, nx, nx)
    b: np.ndarray          # (T-1, nx)
    H: np.ndarray          # (T, ny, nx)
    g: np.ndarray          # (T, ny)
    C: List[np.ndarray]    # per t: (nc_t, nx)
    d: List[np.ndarray]
    E: List[np.ndarray]    # per t: (ne_t, nx)
    f: List[np.ndarray]
    Q: np.ndarray
    R: np.ndarray
    m1: np.ndarray
    P1: np.ndarray

    def Q_at(self, t: int) -> np.ndarray:
        return _cov_at(self.Q, t - 1)

    def R_at(self, t: int) -> np.ndarray:
        return _cov_at(self.R, t)

    def nc(self, t: int) -> int:
        return self.C[t].shape[0]

    def ne(self, t: int) -> int:
        return self.E[t].shape[0]

    def as_nonlinear(self) -> tuple[NonlinearModel, ConstraintSet]:
        """View this affine model as a (trivially) nonlinear one with exact Jacobians."""
        model = NonlinearModel(
            T=self.T, nx=self.nx, ny=self.ny,
            f=lambda t, x: self.A[t - 1] @ x + self.b[t - 1],
            h=lambda t, x: self.H[t] @ x + self.g[t],
            Q=self.Q, R=self.R, m1=self.m1, P1=self.P1,
            jac_f=lambda t, x: self.A[t - 1],
            jac_h=lambda t, x: self.H[t],
        )
        cons = ConstraintSet(
            T=self.T, nx=self.nx,
            nc=np.array([self.nc(t) for t in range(self.T)]),
            ne=np.array([self.ne(t) for t in range(self.T)]),
            c=lambda t, x: self.C[t] @ x + self.d[t],
            e=lambda t, x: self.E[t] @ x + self.f[t],
            jac_c=lambda t, x: self.C[t],
            jac_e=lambda t, x: self.E[t],
        )
        return model, cons


@dataclass(frozen=True)
class PseudoMeasurements:
    """Artificial observations encoding the splitting penalty terms.

    The inequality block is observed as ``z_t`` with covariance
    ``sigma * I`` and the equality block as ``w_t`` with covariance
    ``delta * I``.
    """

    z: List[np.ndarray]
    w: List[np.ndarray]
    sigma: float   # variance of each z component, 1/rho1
    delta: float   # variance of each w component, 1/rho2


def build_pseudo(split: SplitState, scaled: bool = True) -> PseudoMeasurements:
    """Turn the current split variables into pseudo-measurements.

    With ``scaled=True`` (ADMM/PRS form) ``z_t = -v_t - eta_t / rho1`` and
    ``w_t = -zeta_t / rho2``; with ``scaled=False`` (split Bregman form) the
    multipliers enter unscaled: ``z_t = -v_t - eta_t``, ``w_t = -zeta_t``.
    Covariances are ``I/rho1`` and ``I/rho2`` in both forms.
    """
    if any(v.size for v in split.v) and split.rho1 <= 0:
        raise DimensionError("rho1 must be positive with nonempty inequality blocks")
    if any(z.size for z in split.zeta) and split.rho2 <= 0:
        raise DimensionError("rho2 must be positive with nonempty equality blocks")
    if scaled:
        z = [-v - eta / split.rho1 for v, eta in zip(split.v, split.eta)]
        w = [-zeta / split.rho2 for zeta in split.zeta]
    else:
        z = [-v - eta for v, eta in zip(split.v, split.eta)]
        w = [-zeta.copy() for zeta in split.zeta]
    return PseudoMeasurements(z=z, w=w, sigma=1.0 / split.rho1, delta=1.0 / split.rho2)


@dataclass
class FilterResult:
    means: np.ndarray   # (T, nx)
    covs: np.ndarray    # (T, nx, nx)


@dataclass
class SmootherOutput:
    """Filtered and smoothed moments; the smoothed means minimize the subproblem."""

    filtered_means: np.ndarray
    filtered_covs: np.ndarray
    smoothed_means: np.ndarray
    smoothed_covs: np.ndarray


def _measurement_update(m, P, Hb, offset, obs, Rb):
    """Joseph-form update for one observation block."""
    if Hb.shape[0] == 1:
        # scalar innovation: avoid the general factorize/solve machinery
        hrow = Hb[0]
        PHt = P @ hrow
        r = Rb[0, 0]
        s = float(hrow @ PHt) + r
        if s <= 0.0:
            raise NumericalError("innovation covariance not positive definite")
        K = PHt / s
        m = m + K * (float(obs[0]) - float(hrow @ m) - float(offset[0]))
        # Joseph form (I-Kh)P(I-Kh)' + rKK' expanded into outer products
        KPHt = K[:, None] * PHt
        P = P - KPHt - KPHt.T + (s * K)[:, None] * K
        return m, 0.5 * (P + P.T)
    PHt = P @ Hb.T
    S = Hb @ PHt + Rb
    S = 0.5 * (S + S.T)
    if Hb.shape[0] == 2:
        a, b, c = S[0, 0], S[0, 1], S[1, 1]
        det = a * c - b * b
        if a <= 0.0 or det <= 0.0:
            raise NumericalError("innovation covariance not positive definite")
        K = PHt @ np.array([[c, -b], [-b, a]]) / det
    else:
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("innovation covariance not positive definite") from exc
        K = np.linalg.solve(S, PHt.T).T
    m = m + K @ (obs - Hb @ m - offset)
    # Joseph form expanded: P - K(HP) - (HP)'K' + K S K', with S = HPH' + R
    KPHt = K @ PHt.T
    P = P - KPHt - KPHt.T + K @ S @ K.T
    return m, 0.5 * (P + P.T)


def kalman_filter(aff: AffineModel, pseudo: Optional[PseudoMeasurements],
                  meas: np.ndarray) -> FilterResult:
    """Forward pass on the pseudo-measurement-augmented affine model.

    At each step the real measurement block, the inequality pseudo block, and
    the equality pseudo block are applied as sequential updates; empty blocks
    are skipped.  Equivalent to one stacked update because the blocks carry
    independent noises.
    """
    meas = np.asarray(meas, dtype=float)
    if meas.shape != (aff.T, aff.ny):
        raise DimensionError(f"measurements must have shape ({aff.T}, {aff.ny})")

    means = np.empty((aff.T, aff.nx))
    covs = np.empty((aff.T, aff.nx, aff.nx))
    pseudo_cov: dict = {}  # (variance, block size) -> scaled identity

    def _noise(var, size):
        key = (var, size)
        if key not in pseudo_cov:
            pseudo_cov[key] = var * np.eye(size)
        return pseudo_cov[key]

    A_all, b_all = aff.A, aff.b
    H_all, g_all = aff.H, aff.g
    C_all, d_all, E_all, f_all = aff.C, aff.d, aff.E, aff.f
    Q_const = aff.Q if aff.Q.ndim == 2 else None
    R_const = aff.R if aff.R.ndim == 2 else None

    m, P = aff.m1.copy(), aff.P1.copy()
    for t in range(aff.T):
        if t > 0:
            A = A_all[t - 1]
            m = A @ m + b_all[t - 1]
            P = A @ P @ A.T + (Q_const if Q_const is not None else aff.Q_at(t))
            P = 0.5 * (P + P.T)
        m, P = _measurement_update(
            m, P, H_all[t], g_all[t], meas[t],
            R_const if R_const is not None else aff.R_at(t))
        if pseudo is not None:
            C = C_all[t]
            if C.shape[0] > 0:
                m, P = _measurement_update(m, P, C, d_all[t], pseudo.z[t],
                                           _noise(pseudo.sigma, C.shape[0]))
            E = E_all[t]
            if E.shape[0] > 0:
                m, P = _measurement_update(m, P, E, f_all[t], pseudo.w[t],
                                           _noise(pseudo.delta, E.shape[0]))
        means[t], covs[t] = m, P
    return FilterResult(means=means, covs=covs)


def rts_smooth(filtered: FilterResult, aff: AffineModel) -> SmootherOutput:
    """Backward Rauch-Tung-Striebel recursion over the filtered moments."""
    T, nx = filtered.means.shape
    ms = filtered.means.copy()
    Ps = filtered.covs.copy()
    if T == 1:
        return SmootherOutput(filtered_means=filtered.means,
                              filtered_covs=filtered.covs,
                              smoothed_means=ms, smoothed_covs=Ps)
    # predicted moments and gains depend only on filtered quantities, so they
    # can be computed for all steps at once before the backward recursion
    fm, fP, A = filtered.means, filtered.covs, aff.A
    AP = A @ fP[:-1]                                     # (T-1, nx, nx)
    m_pred = np.einsum("tij,tj->ti", A, fm[:-1]) + aff.b
    P_pred = AP @ np.swapaxes(A, 1, 2) \
        + (np.asarray([aff.Q_at(t) for t in range(1, T)])
           if aff.Q.ndim == 3 else aff.Q)
    P_pred = 0.5 * (P_pred + np.swapaxes(P_pred, 1, 2))
    try:
        G = np.swapaxes(np.linalg.solve(P_pred, AP), 1, 2)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular predicted covariance in smoother") from exc
    for t in range(T - 2, -1, -1):
        Gt = G[t]
        ms[t] = fm[t] + Gt @ (ms[t + 1] - m_pred[t])
        Pt = fP[t] + Gt @ (Ps[t + 1] - P_pred[t]) @ Gt.T
        Ps[t] = 0.5 * (Pt + Pt.T)
    return SmootherOutput(filtered_means=filtered.means, filtered_covs=filtered.covs,
                          smoothed_means=ms, smoothed_covs=Ps)


def cks_solve(aff: AffineModel, split: SplitState, meas: np.ndarray,
              scaled: bool = True) -> np.ndarray:
    """Exact minimizer of the affine x-subproblem, as smoothed means."""
    pseudo = build_pseudo(split, scaled=scaled)
    filtered = kalman_filter(aff, pseudo, meas)
    return rts_smooth(filtered, aff).smoothed_means
