#!/usr/bin/env python3
"""End-to-end toy benchmark: measured wall times versus the model.

Thin wrapper over ``adjckpt run`` with a somewhat larger default grid so
the stencil cost dominates Python overhead.
"""

import sys

from adjckpt import cli


def main() -> int:
    argv = sys.argv[1:] or [
        "--grid", "200x200",
        "--nt", "60",
        "--slots", "3",
        "--codec", "cast",
        "--out", "toy_benchmark.csv",
    ]
    return cli.main(["run", *argv])


if __name__ == "__main__":
    sys.exit(main())
