"""Auxiliary variables, multipliers, and run options for the splitting loops."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .exceptions import DimensionError
from .models import ConstraintSet


@dataclass
class SplitState:
    """Auxiliary variables v, multipliers eta/zeta, and splitting parameters.

    ``v[t]``, ``eta[t]`` have length ``nc(t)``; ``zeta[t]`` has length
    ``ne(t)``.  ``v`` stays elementwise nonnegative after every update.
    """

    v: List[np.ndarray]
    eta: List[np.ndarray]
    zeta: List[np.ndarray]
    rho1: float = 1.0
    rho2: float = 1.0
    alpha1: float = 0.5
    alpha2: float = 0.5
    M: int = 1

    def __post_init__(self):
        if self.rho1 <= 0 or self.rho2 <= 0:
            raise DimensionError("penalty parameters rho1, rho2 must be positive")
        if not (0.0 < self.alpha1 < 1.0 and 0.0 < self.alpha2 < 1.0):
            raise DimensionError("relaxation parameters alpha1, alpha2 must lie in (0, 1)")
        if self.M < 1:
            raise DimensionError("inner iteration count M must be >= 1")

    @classmethod
    def zeros(cls, cons: ConstraintSet, *, rho1: float = 1.0, rho2: float = 1.0,
              alpha1: float = 0.5, alpha2: float = 0.5, M: int = 1) -> "SplitState":
        return cls(
            v=[np.zeros(int(n)) for n in cons.nc],
            eta=[np.zeros(int(n)) for n in cons.nc],
            zeta=[np.zeros(int(n)) for n in cons.ne],
            rho1=rho1, rho2=rho2, alpha1=alpha1, alpha2=alpha2, M=M,
        )

    def copy_with(self, v=None, eta=None, zeta=None) -> "SplitState":
        return replace(
            self,
            v=[a.copy() for a in (v if v is not None else self.v)],
            eta=[a.copy() for a in (eta if eta is not None else self.eta)],
            zeta=[a.copy() for a in (zeta if zeta is not None else self.zeta)],
        )


@dataclass
class ConvergenceTrace:
    """Per-outer-iteration diagnostics of a splitting run."""

    theta: List[float] = field(default_factory=list)
    max_ineq: List[float] = field(default_factory=list)
    max_eq: List[float] = field(default_factory=list)
    step_norm: List[float] = field(default_factory=list)
    wall_time: List[float] = field(default_factory=list)

    def record(self, theta: float, max_ineq: float, max_eq: float,
               step_norm: float, wall_time: float) -> None:
        self.theta.append(theta)
        self.max_ineq.append(max_ineq)
        self.max_eq.append(max_eq)
        self.step_norm.append(step_norm)
        self.wall_time.append(wall_time)

    def __len__(self) -> int:
        return len(self.theta)


@dataclass
class InnerOptions:
    """Stopping rule for the Gauss-Newton inner loop."""

    max_inner: int = 10
    tol_inner: float = 1e-8

    def __post_init__(self):
        if self.max_inner < 1:
            raise DimensionError("max_inner must be >= 1")
        if self.tol_inner <= 0:
            raise DimensionError("tol_inner must be positive")


@dataclass
class SolveOptions:
    """Options for the outer splitting loop.

    ``method`` is one of ``admm``, ``prs``, ``sbm``.  The loop stops at
    ``max_outer`` iterations, or earlier once both the step norm and the
    constraint violation fall below their tolerances.  ``prs_v_uses_half_multiplier``
    switches the PRS v-update to the half-step multiplier (the default keeps
    the original multiplier).
    """

    method: str = "admm"
    max_outer: int = 100
    tol_step: float = 1e-8
    tol_violation: float = 1e-6
    rho1: float = 1.0
    rho2: float = 1.0
    alpha1: float = 0.5
    alpha2: float = 0.5
    M: int = 1
    inner: InnerOptions = field(default_factory=InnerOptions)
    prs_v_uses_half_multiplier: bool = False

    def __post_init__(self):
        if self.method not in ("admm", "prs", "sbm"):
            raise DimensionError(f"unknown method {self.method!r}")
        if self.max_outer < 0:
            raise DimensionError("max_outer must be >= 0")
