"""Analytical wall-time model for checkpointed adjoint sweeps.

The model predicts whether compressing checkpoints pays off.  Reversing
``nsteps`` steps costs a floor of one forward plus one reverse pass.  With
``m`` checkpoint slots the schedule replays ``p(nsteps, m)`` extra steps,
and every checkpoint write or read moves ``state_bytes`` across memory at
``bandwidth``.  Compression multiplies the slot count by ``ratio`` (so the
replay count drops) but charges ``compress_time``/``decompress_time`` per
write/read and shrinks each copy by the same ratio:

    t_naive    = 2 * step_cost * nsteps
    t_revolve  = t_naive + p(N, m) * step_cost + (W + R) * S / B
    t_combined = same, at the compressed slot count, with
                 W * (S / (F B) + t_c) + R * (S / (F B) + t_d) as storage

W and R are the write/read counts of the concrete generated schedule.
Speedup is quoted against the plain-checkpointing time, so values above
1.0 mean compression wins.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .errors import InfeasibleConfigurationError, InvalidArgumentError
from .schedule import recompute_count, schedule_counts

__all__ = [
    "PerfParams",
    "RegimeReport",
    "SweepRow",
    "SWEEP_HEADER",
    "REGIME_CHECKPOINT_REQUIRED",
    "REGIME_COMPRESSION_FITS",
    "REGIME_NO_ACTION_NEEDED",
    "t_naive",
    "slots",
    "recompute_overhead",
    "storage_overhead_plain",
    "storage_overhead_compressed",
    "t_revolve",
    "t_combined",
    "speedup",
    "classify_regime",
    "sweep",
    "rows_to_csv",
]

REGIME_CHECKPOINT_REQUIRED = "checkpoint-required"
REGIME_COMPRESSION_FITS = "compression-fits"
REGIME_NO_ACTION_NEEDED = "no-action-needed"


@dataclass(frozen=True)
class PerfParams:
    """One configuration of the cost model; every field strictly positive."""

    step_cost: float  # seconds per primal (or adjoint) step
    nsteps: int
    state_bytes: float  # uncompressed bytes per checkpointed state
    bandwidth: float  # bytes per second for checkpoint copies
    memory_bytes: float  # budget for checkpoint storage
    ratio: float = 1.0  # compression ratio, >= 1
    compress_time: float = 0.0  # seconds to compress one state
    decompress_time: float = 0.0  # seconds to decompress one state

    def __post_init__(self):
        for name in ("step_cost", "nsteps", "state_bytes", "bandwidth", "memory_bytes"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be strictly positive")
        if not self.ratio >= 1.0:
            raise InvalidArgumentError(f"ratio must be >= 1, got {self.ratio}")
        if self.compress_time < 0 or self.decompress_time < 0:
            raise InvalidArgumentError("codec times cannot be negative")


@dataclass(frozen=True)
class RegimeReport:
    regime: str
    threshold_compressed_fit: float  # bytes at which the compressed trajectory fits
    threshold_uncompressed_fit: float  # bytes at which the raw trajectory fits


def t_naive(p: PerfParams) -> float:
    return 2.0 * p.step_cost * p.nsteps


def slots(p: PerfParams, compressed: bool) -> int:
    """Checkpoint slots that fit in the memory budget."""
    per_state = p.state_bytes / p.ratio if compressed else p.state_bytes
    count = math.floor(p.memory_bytes / per_state)
    if count < 1:
        raise InfeasibleConfigurationError(
            f"memory {p.memory_bytes:.3g} B cannot hold even one "
            f"{'compressed ' if compressed else ''}state of {per_state:.3g} B"
        )
    return count


def recompute_overhead(p: PerfParams, m: int) -> float:
    if m >= p.nsteps:
        return 0.0
    return recompute_count(p.nsteps, m) * p.step_cost


def _write_read_counts(p: PerfParams, m: int) -> tuple[int, int]:
    counts = schedule_counts(p.nsteps, min(m, p.nsteps))
    return counts.writes, counts.reads


def storage_overhead_plain(p: PerfParams, m: int) -> float:
    w, r = _write_read_counts(p, m)
    return (w + r) * p.state_bytes / p.bandwidth


def storage_overhead_compressed(p: PerfParams, m_compressed: int) -> float:
    w, r = _write_read_counts(p, m_compressed)
    copy = p.state_bytes / (p.ratio * p.bandwidth)
    return w * (copy + p.compress_time) + r * (copy + p.decompress_time)


def t_revolve(p: PerfParams) -> float:
    m = slots(p, compressed=False)
    return t_naive(p) + recompute_overhead(p, m) + storage_overhead_plain(p, m)


def t_combined(p: PerfParams) -> float:
    m_c = slots(p, compressed=True)
    return t_naive(p) + recompute_overhead(p, m_c) + storage_overhead_compressed(p, m_c)


def speedup(p: PerfParams) -> float:
    return t_revolve(p) / t_combined(p)


def classify_regime(p: PerfParams) -> RegimeReport:
    """Which of the three memory regimes the configuration sits in.

    Boundaries are inclusive on the fits side: exactly fitting needs no
    checkpointing.
    """
    fit_raw = p.nsteps * p.state_bytes
    fit_compressed = fit_raw / p.ratio
    if p.memory_bytes >= fit_raw:
        regime = REGIME_NO_ACTION_NEEDED
    elif p.memory_bytes >= fit_compressed:
        regime = REGIME_COMPRESSION_FITS
    else:
        regime = REGIME_CHECKPOINT_REQUIRED
        slots(p, compressed=True)  # surfaces infeasible budgets
    return RegimeReport(
        regime=regime,
        threshold_compressed_fit=fit_compressed,
        threshold_uncompressed_fit=fit_raw,
    )


# ---------------------------------------------------------------------------
# Sweeps behind the speedup figures
# ---------------------------------------------------------------------------

SWEEP_AXES = ("memory", "compute-cost", "nsteps")

SWEEP_HEADER = "x,speedup,t_revolve_s,t_combined_s,m_plain,m_compressed,p_plain,p_compressed"


@dataclass(frozen=True)
class SweepRow:
    x: float
    speedup: float
    t_revolve_s: float
    t_combined_s: float
    m_plain: int
    m_compressed: int
    p_plain: int
    p_compressed: int

    def csv(self) -> str:
        return (
            f"{self.x!r},{self.speedup!r},{self.t_revolve_s!r},{self.t_combined_s!r},"
            f"{self.m_plain},{self.m_compressed},{self.p_plain},{self.p_compressed}"
        )


def _axis_values(axis: str, lo: float, hi: float, samples: int) -> list[float]:
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    if lo <= 0 or hi < lo:
        raise InvalidArgumentError(f"need 0 < lo <= hi, got {lo}..{hi}")
    if samples == 1 or lo == hi:
        return [float(lo)]
    if axis == "nsteps":
        vals = np.linspace(lo, hi, samples)
        return sorted({float(max(1, round(v))) for v in vals})
    # memory and compute-cost span orders of magnitude; sample geometrically
    return [float(v) for v in np.geomspace(lo, hi, samples)]


def _eval_point(p: PerfParams, axis: str, x: float) -> SweepRow:
    if axis == "memory":
        q = replace(p, memory_bytes=x)
    elif axis == "compute-cost":
        q = replace(p, step_cost=x)
    elif axis == "nsteps":
        q = replace(p, nsteps=int(x))
    else:
        raise InvalidArgumentError(f"unknown sweep axis {axis!r} (choose {SWEEP_AXES})")
    m_plain = slots(q, compressed=False)
    m_c = slots(q, compressed=True)
    tr = t_revolve(q)
    tc = t_combined(q)
    return SweepRow(
        x=x,
        speedup=tr / tc,
        t_revolve_s=tr,
        t_combined_s=tc,
        m_plain=m_plain,
        m_compressed=m_c,
        p_plain=recompute_count(q.nsteps, min(m_plain, q.nsteps)),
        p_compressed=recompute_count(q.nsteps, min(m_c, q.nsteps)),
    )


def sweep(
    p: PerfParams,
    axis: str,
    lo: float,
    hi: float,
    samples: int,
    threads: int = 1,
) -> list[SweepRow]:
    """Evaluate the model along one axis; rows come back ordered by x."""
    if axis not in SWEEP_AXES:
        raise InvalidArgumentError(f"unknown sweep axis {axis!r} (choose {SWEEP_AXES})")
    xs = _axis_values(axis, lo, hi, samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda x: _eval_point(p, axis, x), xs))
    else:
        rows = [_eval_point(p, axis, x) for x in xs]
    return sorted(rows, key=lambda r: r.x)


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    return SWEEP_HEADER + "\n" + "\n".join(r.csv() for r in rows) + "\n"
