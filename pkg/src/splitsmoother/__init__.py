"""Constrained state estimation via smoother-based variable splitting."""

from .cks import (AffineModel, PseudoMeasurements, SmootherOutput, build_pseudo,
                  cks_solve, kalman_filter, rts_smooth)
from .cieks import cieks_solve, linearize_at
from .exceptions import DimensionError, NumericalError, ProblemTooLargeError
from .models import (ConstraintSet, NonlinearModel, constant_model, eval_theta,
                     eval_violation, finite_diff_jacobian, prior_rollout,
                     validate_jacobians)
from .oracle import (batch_gauss_newton, batch_qp_solve, batch_split_solve,
                     batch_theta_grad)
from .ship import (ExperimentResult, ShipExperimentConfig, run_experiment,
                   run_scaling, ship_model, ship_truth, simulate)
from .splitstate import ConvergenceTrace, InnerOptions, SolveOptions, SplitState
from .splitting import (SolveResult, admm_step, prs_step, sbm_step, solve,
                        unconstrained_estimate)

__version__ = "0.1.0"
