#!/usr/bin/env python3
"""Speedup versus per-step compute cost at a fixed, tight memory budget.

Cheap kernels lose to the codec overhead; expensive kernels approach the
bound set purely by the two recompute counts.
"""

import argparse

from adjckpt import perfmodel


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nsteps", type=int, default=2500)
    ap.add_argument("--state-bytes", type=float, default=900e6)
    ap.add_argument("--bandwidth", type=float, default=10e9)
    ap.add_argument("--memory", type=float, default=8e9)
    ap.add_argument("--ratio", type=float, default=42.0)
    ap.add_argument("--tc", type=float, default=0.05)
    ap.add_argument("--td", type=float, default=0.05)
    ap.add_argument("--lo", type=float, default=1e-4)
    ap.add_argument("--hi", type=float, default=1e3)
    ap.add_argument("--samples", type=int, default=29)
    ap.add_argument("--out", default="compute_cost_sweep.csv")
    args = ap.parse_args()

    p = perfmodel.PerfParams(
        step_cost=args.lo,
        nsteps=args.nsteps,
        state_bytes=args.state_bytes,
        bandwidth=args.bandwidth,
        memory_bytes=args.memory,
        ratio=args.ratio,
        compress_time=args.tc,
        decompress_time=args.td,
    )
    rows = perfmodel.sweep(p, "compute-cost", args.lo, args.hi, args.samples)
    with open(args.out, "w") as fh:
        fh.write(perfmodel.rows_to_csv(rows))
    asym = (2 * p.nsteps + rows[-1].p_plain) / (2 * p.nsteps + rows[-1].p_compressed)
    print(f"recompute-only speedup bound: {asym:.4f}")
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
