"""Optimal checkpoint schedules for forward-then-reverse computations.

Reversing ``n`` forward steps with only ``m`` checkpoint slots forces some
steps to be recomputed.  ``recompute_count`` evaluates the minimum number of
recomputed steps by dynamic programming:

    p(n, 1) = n(n-1)/2
    p(n, m) = 0                                             for m >= n
    p(n, m) = min over 1 <= k <= n-1 of k + p(k, m) + p(n-k, m-1)

``generate_schedule`` expands the argmin tree of that recurrence into a
concrete action stream.  The stream drives a small register machine:

  * ``cur``    the live primal state (one step index),
  * ``upper``  the state one step above ``cur``, produced either by a
    ``PrimalCapture`` or carried down from the previous ``AdjointStep``.

``AdjointStep k`` consumes the bracketing pair (state k, state k+1), so an
adjoint sweep through fully stored states needs no recomputation at all,
while a sweep through sparse checkpoints replays segments via ``Advance``
and one ``PrimalCapture`` per uncaptured step.  Total primal executions of
a generated stream equal ``n + p(n, m)`` by construction.

Ties in the argmin are broken toward the smallest split so that schedules
are reproducible byte for byte.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import InvalidArgumentError, ScheduleValidationError

__all__ = [
    "Advance",
    "Store",
    "Restore",
    "PrimalCapture",
    "AdjointStep",
    "Discard",
    "ScheduleAction",
    "ScheduleStats",
    "recompute_count",
    "schedule_counts",
    "generate_schedule",
    "schedule_stats",
    "format_schedule",
    "parse_schedule",
]


@dataclass(frozen=True)
class Advance:
    """Run primal steps ``from_step .. to_step-1`` without saving anything."""

    from_step: int
    to_step: int


@dataclass(frozen=True)
class Store:
    slot: int
    state: int


@dataclass(frozen=True)
class Restore:
    slot: int
    state: int


@dataclass(frozen=True)
class PrimalCapture:
    """Run primal step ``step`` keeping its output live for the next adjoint."""

    step: int


@dataclass(frozen=True)
class AdjointStep:
    step: int


@dataclass(frozen=True)
class Discard:
    slot: int


ScheduleAction = Union[Advance, Store, Restore, PrimalCapture, AdjointStep, Discard]


@dataclass(frozen=True)
class ScheduleStats:
    recompute_steps: int
    writes: int
    reads: int
    peak_slots: int


def _check_args(n: int, m: int) -> None:
    if n < 1 or m < 1:
        raise InvalidArgumentError(f"need n >= 1 and m >= 1, got n={n}, m={m}")


# ---------------------------------------------------------------------------
# Dynamic program
#
# Rows of the DP table are cached per slot count.  Row m holds p(n, m) for
# every n up to the largest query seen so far.  Three closed forms keep the
# table small: p(n, m) = 0 for n <= m, the quadratic m == 1 row, and the
# near-full zone p(n, m) = n - m + 1 for m < n <= 2m - 1 (provable directly
# from the recurrence).  Rows are immutable once published, so concurrent
# readers are safe; a rebuild replaces the dict entry atomically.
# ---------------------------------------------------------------------------

_ROWS: dict[int, np.ndarray] = {}


def _row_m1(nmax: int) -> np.ndarray:
    n = np.arange(nmax + 1, dtype=np.int64)
    return n * (n - 1) // 2


def _build_row(m: int, nmax: int, prev: np.ndarray) -> np.ndarray:
    row = np.zeros(nmax + 1, dtype=np.int64)
    zone_hi = min(2 * m - 1, nmax)
    if zone_hi > m:
        row[m + 1 : zone_hi + 1] = np.arange(m + 1, zone_hi + 1) - m + 1
    if nmax < 2 * m:
        return row

    big = np.int64(1) << 60
    best = np.full(nmax + 1, big, dtype=np.int64)
    # Splits k <= 2m-1 have closed-form head cost; one shifted pass per k
    # covers every n at once.
    for k in range(1, min(2 * m, nmax)):
        head = k + int(row[k])
        lo = max(2 * m, k + 1)
        if lo > nmax:
            break
        best[lo:] = np.minimum(best[lo:], head + prev[lo - k : nmax + 1 - k])
    # For n <= 3m - 2 no split k >= 2m can win (head cost alone exceeds the
    # closed-form bound), so the vectorized minimum is already exact there.
    seq_lo = max(2 * m, 3 * m - 1)
    row[2 * m : seq_lo] = best[2 * m : seq_lo]
    ks = np.arange(nmax + 1, dtype=np.int64)
    for n in range(seq_lo, nmax + 1):
        cand = ks[2 * m : n] + row[2 * m : n] + prev[n - 2 * m : 0 : -1]
        val = cand.min() if cand.size else big
        row[n] = min(int(best[n]), int(val))
    return row


def _ensure_rows(m: int, nmax: int) -> None:
    have = _ROWS.get(1)
    if have is None or have.size <= nmax:
        _ROWS[1] = _row_m1(nmax)
    for j in range(2, m + 1):
        have = _ROWS.get(j)
        if have is None or have.size <= nmax:
            _ROWS[j] = _build_row(j, nmax, _ROWS[j - 1])


def recompute_count(n: int, m: int) -> int:
    """Minimum number of recomputed primal steps to reverse n steps with m slots."""
    _check_args(n, m)
    if m >= n:
        return 0
    if m == 1:
        return n * (n - 1) // 2
    if n <= 2 * m - 1:
        return n - m + 1
    _ensure_rows(m, n)
    return int(_ROWS[m][n])


def _split(n: int, m: int) -> int:
    """Smallest k minimizing k + p(k, m) + p(n-k, m-1); only for 1 < m < n."""
    if n <= 2 * m - 1:
        return 1 if m == 2 else n - m + 1
    _ensure_rows(m, n)
    row, prev = _ROWS[m], _ROWS[m - 1]
    ks = np.arange(1, n, dtype=np.int64)
    cand = ks + row[1:n] + prev[n - 1 : 0 : -1]
    return int(np.argmin(cand)) + 1


# ---------------------------------------------------------------------------
# Expansion into an executable action stream
# ---------------------------------------------------------------------------


def generate_schedule(n: int, m: int) -> list[ScheduleAction]:
    """Expand the DP argmin tree into a valid action stream reversing n steps."""
    _check_args(n, m)
    actions: list[ScheduleAction] = []
    free: list[int] = list(range(m))
    heapq.heapify(free)
    base = heapq.heappop(free)
    actions.append(Store(slot=base, state=0))
    _expand(actions, 0, n, m, base, free)
    actions.append(Discard(slot=base))
    return actions


def _expand(
    actions: list[ScheduleAction],
    lo: int,
    hi: int,
    m: int,
    base: int,
    free: list[int],
) -> None:
    # Invariant on entry: state `lo` is stored in `base` and is the live
    # state; `m` counts the slots this segment may touch, `base` included.
    while True:
        n = hi - lo
        if n == 1:
            actions.append(PrimalCapture(step=lo))
            actions.append(AdjointStep(step=lo))
            return
        if m == 1:
            for k in range(hi - 1, lo - 1, -1):
                if k != hi - 1:
                    actions.append(Restore(slot=base, state=lo))
                if k > lo:
                    actions.append(Advance(from_step=lo, to_step=k))
                actions.append(PrimalCapture(step=k))
                actions.append(AdjointStep(step=k))
            return
        if m >= n:
            held: list[int] = []
            for k in range(lo + 1, hi):
                actions.append(Advance(from_step=k - 1, to_step=k))
                s = heapq.heappop(free)
                held.append(s)
                actions.append(Store(slot=s, state=k))
            actions.append(PrimalCapture(step=hi - 1))
            actions.append(AdjointStep(step=hi - 1))
            for k in range(hi - 2, lo - 1, -1):
                drop = held[k - lo]
                actions.append(Discard(slot=drop))
                heapq.heappush(free, drop)
                s_k = base if k == lo else held[k - lo - 1]
                actions.append(Restore(slot=s_k, state=k))
                actions.append(AdjointStep(step=k))
            return
        k = _split(n, m)
        mid = lo + k
        actions.append(Advance(from_step=lo, to_step=mid))
        s_mid = heapq.heappop(free)
        actions.append(Store(slot=s_mid, state=mid))
        _expand(actions, mid, hi, m - 1, s_mid, free)
        actions.append(Discard(slot=s_mid))
        heapq.heappush(free, s_mid)
        actions.append(Restore(slot=base, state=lo))
        hi = mid


# ---------------------------------------------------------------------------
# Stream accounting and validation
# ---------------------------------------------------------------------------

_COUNT_MEMO: dict[tuple[int, int], tuple[int, int, int, int]] = {}


def _counts(n: int, m: int) -> tuple[int, int, int, int]:
    """(writes, reads, peak, primal executions) for one expanded segment."""
    if n == 1:
        return (0, 0, 1, 1)
    if m == 1:
        return (0, n - 1, 1, n * (n - 1) // 2 + n)
    if m >= n:
        return (n - 1, n - 1, n, n)
    key = (n, m)
    hit = _COUNT_MEMO.get(key)
    if hit is not None:
        return hit
    k = _split(n, m)
    wt, rt, pt, et = _counts(n - k, m - 1)
    wh, rh, ph, eh = _counts(k, m)
    out = (1 + wt + wh, 1 + rt + rh, max(1 + pt, ph), k + et + eh)
    _COUNT_MEMO[key] = out
    return out


def schedule_counts(n: int, m: int) -> ScheduleStats:
    """Stats of ``generate_schedule(n, m)`` without materializing the stream."""
    _check_args(n, m)
    w, r, peak, execs = _counts(n, m)
    return ScheduleStats(
        recompute_steps=execs - n, writes=w + 1, reads=r, peak_slots=peak
    )


def schedule_stats(actions: Iterable[ScheduleAction], n: int, m: int) -> ScheduleStats:
    """Count and validate an action stream against the execution contract.

    Raises ScheduleValidationError naming the first offending action index.
    """
    _check_args(n, m)
    actions = list(actions)
    slots: dict[int, int] = {}
    cur: int | None = 0
    upper: int | None = None
    next_adjoint = n - 1
    writes = reads = peak = 0
    primal = 0
    for i, act in enumerate(actions):
        if isinstance(act, Store):
            if cur != act.state:
                raise ScheduleValidationError(i, f"store of state {act.state} but live state is {cur}")
            if act.slot in slots:
                raise ScheduleValidationError(i, f"slot {act.slot} already occupied")
            slots[act.slot] = act.state
            writes += 1
            peak = max(peak, len(slots))
            if len(slots) > m:
                raise ScheduleValidationError(i, f"{len(slots)} slots in use, only {m} available")
        elif isinstance(act, Restore):
            if act.slot not in slots:
                raise ScheduleValidationError(i, f"restore from empty slot {act.slot}")
            if slots[act.slot] != act.state:
                raise ScheduleValidationError(
                    i, f"slot {act.slot} holds state {slots[act.slot]}, not {act.state}"
                )
            cur = act.state
            if upper != act.state + 1:
                upper = None
            reads += 1
        elif isinstance(act, Advance):
            if act.to_step <= act.from_step:
                raise ScheduleValidationError(i, "advance must move forward")
            if cur != act.from_step:
                raise ScheduleValidationError(i, f"advance from {act.from_step} but live state is {cur}")
            primal += act.to_step - act.from_step
            cur = act.to_step
            upper = None
        elif isinstance(act, PrimalCapture):
            if cur != act.step:
                raise ScheduleValidationError(i, f"capture of step {act.step} but live state is {cur}")
            if not 0 <= act.step < n:
                raise ScheduleValidationError(i, f"step {act.step} out of range")
            primal += 1
            upper = act.step + 1
        elif isinstance(act, AdjointStep):
            if act.step != next_adjoint:
                raise ScheduleValidationError(
                    i, f"adjoint of step {act.step}, expected {next_adjoint}"
                )
            if cur != act.step or upper != act.step + 1:
                raise ScheduleValidationError(
                    i, f"adjoint of step {act.step} without states {act.step} and {act.step + 1} live"
                )
            upper = act.step
            next_adjoint -= 1
        elif isinstance(act, Discard):
            if act.slot not in slots:
                raise ScheduleValidationError(i, f"discard of empty slot {act.slot}")
            del slots[act.slot]
        else:
            raise ScheduleValidationError(i, f"unknown action {act!r}")
    if next_adjoint != -1:
        raise ScheduleValidationError(
            len(actions), f"stream ends with adjoint steps {next_adjoint}..0 missing"
        )
    return ScheduleStats(
        recompute_steps=primal - n, writes=writes, reads=reads, peak_slots=peak
    )


# ---------------------------------------------------------------------------
# Line-oriented text form, one action per line
# ---------------------------------------------------------------------------

_LINE_RE = re.compile(r"^([A-Z]+)((?:\s+[a-z_]+=\d+)*)\s*$")


def format_action(act: ScheduleAction) -> str:
    if isinstance(act, Advance):
        return f"ADVANCE from={act.from_step} to={act.to_step}"
    if isinstance(act, Store):
        return f"STORE slot={act.slot} state={act.state}"
    if isinstance(act, Restore):
        return f"RESTORE slot={act.slot} state={act.state}"
    if isinstance(act, PrimalCapture):
        return f"CAPTURE step={act.step}"
    if isinstance(act, AdjointStep):
        return f"ADJOINT step={act.step}"
    if isinstance(act, Discard):
        return f"DISCARD slot={act.slot}"
    raise InvalidArgumentError(f"not a schedule action: {act!r}")


def format_schedule(actions: Iterable[ScheduleAction]) -> str:
    return "\n".join(format_action(a) for a in actions) + "\n"


def parse_action(line: str) -> ScheduleAction:
    match = _LINE_RE.match(line.strip())
    if not match:
        raise InvalidArgumentError(f"unparseable schedule line: {line!r}")
    verb, rest = match.group(1), match.group(2)
    kv = dict(part.split("=") for part in rest.split())
    args = {key: int(val) for key, val in kv.items()}
    try:
        if verb == "ADVANCE":
            return Advance(from_step=args.pop("from"), to_step=args.pop("to"))
        if verb == "STORE":
            return Store(slot=args.pop("slot"), state=args.pop("state"))
        if verb == "RESTORE":
            return Restore(slot=args.pop("slot"), state=args.pop("state"))
        if verb == "CAPTURE":
            return PrimalCapture(step=args.pop("step"))
        if verb == "ADJOINT":
            return AdjointStep(step=args.pop("step"))
        if verb == "DISCARD":
            return Discard(slot=args.pop("slot"))
    except KeyError as exc:
        raise InvalidArgumentError(f"missing field {exc} in line: {line!r}") from None
    raise InvalidArgumentError(f"unknown schedule verb {verb!r}")


def parse_schedule(text: str) -> list[ScheduleAction]:
    return [parse_action(line) for line in text.splitlines() if line.strip()]
