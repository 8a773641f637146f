#!/usr/bin/env python3
"""Speedup versus trajectory length at a fixed memory budget.

Longer adjoint computations recompute disproportionately more under plain
checkpointing, so the benefit of compression grows with the step count.
"""

import argparse

from adjckpt import perfmodel


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--state-bytes", type=float, default=900e6)
    ap.add_argument("--bandwidth", type=float, default=10e9)
    ap.add_argument("--memory", type=float, default=4.5e9)
    ap.add_argument("--step-cost", type=float, default=0.1)
    ap.add_argument("--ratio", type=float, default=4.0)
    ap.add_argument("--tc", type=float, default=0.05)
    ap.add_argument("--td", type=float, default=0.05)
    ap.add_argument("--lo", type=int, default=40)
    ap.add_argument("--hi", type=int, default=1200)
    ap.add_argument("--samples", type=int, default=30)
    ap.add_argument("--out", default="nsteps_sweep.csv")
    args = ap.parse_args()

    p = perfmodel.PerfParams(
        step_cost=args.step_cost,
        nsteps=args.lo,
        state_bytes=args.state_bytes,
        bandwidth=args.bandwidth,
        memory_bytes=args.memory,
        ratio=args.ratio,
        compress_time=args.tc,
        decompress_time=args.td,
    )
    rows = perfmodel.sweep(p, "nsteps", args.lo, args.hi, args.samples)
    with open(args.out, "w") as fh:
        fh.write(perfmodel.rows_to_csv(rows))
    print(f"speedup {rows[0].speedup:.3f} at N={int(rows[0].x)} "
          f"-> {rows[-1].speedup:.3f} at N={int(rows[-1].x)}")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
