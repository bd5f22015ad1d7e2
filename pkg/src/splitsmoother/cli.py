"""Command-line front end.

Subcommands:

* ``simulate`` — generate the ship-tracking ground truth and noisy range
  measurements as CSV.
* ``solve`` — run one splitting method on a simulated data directory.
* ``scaling`` — runtime study over a list of trajectory lengths.
* ``verify`` — run the oracle-equivalence checks.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as sio
from . import verify
from .exceptions import DimensionError, NumericalError, ProblemTooLargeError
from .models import eval_violation
from .ship import (ShipExperimentConfig, ship_model, ship_truth, simulate,
                   run_scaling, time_grid)
from .splitting import solve


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--T", type=int, default=100)
    parser.add_argument("--tau", type=float, default=0.25)
    parser.add_argument("--method", choices=("admm", "prs", "sbm"),
                        default="admm")
    parser.add_argument("--rho1", type=float, default=1.0)
    parser.add_argument("--rho2", type=float, default=1.0)
    parser.add_argument("--alpha", type=float, default=0.5,
                        help="relaxation for both multiplier half-steps (PRS)")
    parser.add_argument("--M", type=int, default=1,
                        help="inner repetition count of the split Bregman step")
    parser.add_argument("--max-outer", type=int, default=100)
    parser.add_argument("--max-inner", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory")


def _config_from_args(args) -> ShipExperimentConfig:
    return ShipExperimentConfig(
        T=args.T, tau=args.tau, method=args.method,
        rho1=args.rho1, rho2=args.rho2, alpha1=args.alpha, alpha2=args.alpha,
        M=args.M, max_outer=args.max_outer, max_inner=args.max_inner,
        seed=args.seed,
    )


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    truth = ship_truth(cfg)
    meas = simulate(cfg)
    times = time_grid(cfg)
    sio.write_trajectory_csv(out / "truth.csv", truth, times)
    sio.write_measurements_csv(out / "measurements.csv", meas, times)
    sio.write_config(out / "config.txt", cfg)
    print(f"wrote truth.csv, measurements.csv, config.txt to {out}")
    return 0


def cmd_solve(args) -> int:
    data = args.data or args.out
    cfg = sio.read_config(data / "config.txt")
    cfg = replace(cfg, method=args.method, rho1=args.rho1, rho2=args.rho2,
                  alpha1=args.alpha, alpha2=args.alpha, M=args.M,
                  max_outer=args.max_outer, max_inner=args.max_inner)
    _, meas = sio.read_measurements_csv(data / "measurements.csv")
    model, cons = ship_model(cfg)

    result = solve(model, cons, meas, cfg.solve_options())
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    times = time_grid(cfg)
    sio.write_trajectory_csv(out / "estimate.csv", result.trajectory, times)
    sio.write_trajectory_csv(out / "unconstrained.csv", result.initial, times)
    sio.write_trace_csv(out / "trace.csv", result.trace)
    max_ineq, max_eq = eval_violation(cons, result.trajectory)
    summary = {
        "iterations": len(result.trace),
        "final_theta": result.trace.theta[-1] if len(result.trace) else float("nan"),
        "final_max_ineq": max_ineq,
        "final_max_eq": max_eq,
    }
    truth_path = data / "truth.csv"
    if truth_path.exists():
        _, truth = sio.read_trajectory_csv(truth_path)
        rmse = np.sqrt(np.mean((result.trajectory - truth) ** 2, axis=0))
        for i, val in enumerate(rmse, start=1):
            summary[f"rmse_x{i}"] = val
    sio.write_config(out / "result.txt", cfg, extra=summary)
    print(f"{cfg.method}: {summary['iterations']} iterations, "
          f"max inequality violation {max_ineq:.2e}")
    return 0


def cmd_scaling(args) -> int:
    cfg = _config_from_args(args)
    rows = run_scaling(cfg, args.T_list, repeats=args.repeats,
                       include_batch=not args.no_batch)
    args.out.mkdir(parents=True, exist_ok=True)
    sio.write_scaling_csv(args.out / "scaling.csv", rows)
    for row in rows:
        secs = "--" if row.status != "ok" else f"{row.mean_seconds:.3f}s"
        print(f"T={row.T:>8d}  {row.solver:<12s}  {secs}  {row.status}")
    return 0


def cmd_verify(args) -> int:
    results = verify.run_all(seed=args.seed)
    failed = False
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"[{tag}] {res.name}: {res.detail}")
        failed = failed or not res.passed
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitsmoother",
        description="Constrained state estimation via smoother-based "
                    "variable splitting")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="emit ship truth + measurements CSV")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_solve = sub.add_parser("solve", help="run one method on simulated CSV data")
    _add_common(p_solve)
    p_solve.add_argument("--data", type=Path, default=None,
                         help="input directory (defaults to --out)")
    p_solve.set_defaults(func=cmd_solve)

    p_scale = sub.add_parser("scaling", help="runtime study over several T")
    _add_common(p_scale)
    p_scale.add_argument("--T-list", type=int, nargs="+", required=True)
    p_scale.add_argument("--repeats", type=int, default=3)
    p_scale.add_argument("--no-batch", action="store_true",
                         help="skip the dense batch baseline")
    p_scale.set_defaults(func=cmd_scaling)

    p_verify = sub.add_parser("verify", help="run the oracle-equivalence suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DimensionError, NumericalError, ProblemTooLargeError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
