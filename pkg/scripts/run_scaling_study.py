#!/usr/bin/env python3
"""Runtime scaling study: smoother-based splitting vs the dense batch solver.

The dense solver is skipped (reported, not crashed) once its normal equations
exceed the memory limit.
"""

import argparse
from pathlib import Path

from splitsmoother import io as sio
from splitsmoother.ship import ShipExperimentConfig, run_scaling


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--T-list", type=int, nargs="+",
                        default=[100, 1000, 10000])
    parser.add_argument("--method", default="admm",
                        choices=("admm", "prs", "sbm"))
    parser.add_argument("--max-outer", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--no-batch", action="store_true")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("scaling_results"))
    args = parser.parse_args()

    cfg = ShipExperimentConfig(method=args.method, max_outer=args.max_outer,
                               seed=args.seed)
    rows = run_scaling(cfg, args.T_list, repeats=args.repeats,
                       include_batch=not args.no_batch)
    args.out.mkdir(parents=True, exist_ok=True)
    sio.write_scaling_csv(args.out / "scaling.csv", rows)
    for row in rows:
        secs = "--" if row.status != "ok" else f"{row.mean_seconds:.3f}s"
        print(f"T={row.T:>8d}  {row.solver:<12s}  {secs:>10s}  {row.status}")
    print(f"\nwrote {args.out}/scaling.csv")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
