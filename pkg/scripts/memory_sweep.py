#!/usr/bin/env python3
"""Speedup of compressed checkpointing versus plain, swept over memory.

Defaults reproduce the production-scale scenario: 2500 steps of a 900 MB
state, compression ratio 42, codec costs 50 ms per state.  The sweep spans
all three memory regimes; the two printed thresholds mark where the
compressed and the raw trajectory start to fit entirely.
"""

import argparse

from adjckpt import perfmodel


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nsteps", type=int, default=2500)
    ap.add_argument("--state-bytes", type=float, default=900e6)
    ap.add_argument("--bandwidth", type=float, default=10e9)
    ap.add_argument("--step-cost", type=float, default=0.1)
    ap.add_argument("--ratio", type=float, default=42.0)
    ap.add_argument("--tc", type=float, default=0.05)
    ap.add_argument("--td", type=float, default=0.05)
    ap.add_argument("--lo", type=float, default=2e9)
    ap.add_argument("--hi", type=float, default=3e12)
    ap.add_argument("--samples", type=int, default=25)
    ap.add_argument("--out", default="memory_sweep.csv")
    args = ap.parse_args()

    p = perfmodel.PerfParams(
        step_cost=args.step_cost,
        nsteps=args.nsteps,
        state_bytes=args.state_bytes,
        bandwidth=args.bandwidth,
        memory_bytes=args.lo,
        ratio=args.ratio,
        compress_time=args.tc,
        decompress_time=args.td,
    )
    report = perfmodel.classify_regime(p)
    print(f"compressed trajectory fits at {report.threshold_compressed_fit:.4g} B")
    print(f"raw trajectory fits at        {report.threshold_uncompressed_fit:.4g} B")
    rows = perfmodel.sweep(p, "memory", args.lo, args.hi, args.samples)
    with open(args.out, "w") as fh:
        fh.write(perfmodel.rows_to_csv(rows))
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
