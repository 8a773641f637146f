"""Schedule executor and the toy acoustic-wave operator it is verified on.

The wave operator solves m(x) u_tt - lap(u) = q with a second-order
leapfrog stencil and zero Dirichlet boundaries, on a 1D or 2D grid.  The
restartable state after step i is the pair (u_{i-1}, u_i), stacked as one
array of shape (2, *grid).  The reverse sweep propagates the exact discrete
transpose of that update, injects receiver residuals as adjoint sources,
and accumulates the objective gradient with respect to the squared
slowness m.

``execute`` drives any ``Stepper`` through a schedule produced by the
schedule module, pulling checkpoints from a ``CheckpointStore`` through a
codec.  Its register machine mirrors the one documented in
``adjckpt.schedule``: the adjoint of step i consumes the bracketing states
i and i+1, where state i+1 comes either from a PrimalCapture or is carried
down from the previous adjoint step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol

import numpy as np

from .codecs import Codec
from .errors import AdjCkptError, ExecutionError, InvalidArgumentError
from .schedule import (
    Advance,
    AdjointStep,
    Discard,
    PrimalCapture,
    Restore,
    ScheduleAction,
    Store,
)
from .store import CheckpointStore

__all__ = [
    "WaveParams",
    "WaveAdjoint",
    "WaveStepper",
    "Stepper",
    "ExecutionStats",
    "ExecutionResult",
    "ricker_wavelet",
    "wave_forward_step",
    "wave_adjoint_step",
    "misfit",
    "simulate",
    "adjoint_source_series",
    "reference_adjoint",
    "dot_test",
    "execute",
    "load_benchmark_config",
]


def ricker_wavelet(nt: int, dt: float, peak_freq: float, delay: float | None = None) -> np.ndarray:
    """Band-limited source pulse: second derivative of a Gaussian."""
    if delay is None:
        delay = 1.0 / peak_freq
    t = np.arange(nt) * dt - delay
    arg = (np.pi * peak_freq * t) ** 2
    return (1.0 - 2.0 * arg) * np.exp(-arg)


@dataclass(frozen=True)
class WaveParams:
    """Grid, medium, source and receivers of one toy wave problem.

    ``slowness_sq`` is 1/c(x)^2.  The leapfrog update is stable only under
    dt <= spacing * sqrt(min slowness_sq) / sqrt(ndim); construction fails
    on violation rather than letting a run blow up midway.
    """

    shape: tuple[int, ...]
    spacing: float
    dt: float
    slowness_sq: np.ndarray
    wavelet: np.ndarray
    source: tuple[int, ...]
    receivers: tuple[tuple[int, ...], ...]
    nt: int

    def __post_init__(self):
        ndim = len(self.shape)
        if ndim not in (1, 2):
            raise InvalidArgumentError("only 1D and 2D grids are supported")
        if self.slowness_sq.shape != self.shape:
            raise InvalidArgumentError("slowness_sq shape does not match the grid")
        if np.any(self.slowness_sq <= 0):
            raise InvalidArgumentError("slowness_sq must be positive everywhere")
        if self.nt < 1 or len(self.wavelet) < self.nt:
            raise InvalidArgumentError("need nt >= 1 and a wavelet covering nt steps")
        limit = self.spacing * np.sqrt(self.slowness_sq.min()) / np.sqrt(ndim)
        if not self.dt <= limit:
            raise InvalidArgumentError(
                f"stability violated: dt={self.dt:g} exceeds limit {limit:g}"
            )
        for loc in (self.source, *self.receivers):
            if len(loc) != ndim or any(not 0 < c < s - 1 for c, s in zip(loc, self.shape)):
                raise InvalidArgumentError(
                    f"point {loc} must lie strictly inside the grid {self.shape}"
                )

    @property
    def ndim(self) -> int:
        return len(self.shape)


def homogeneous_params(
    shape: tuple[int, ...],
    nt: int,
    velocity: float = 1500.0,
    spacing: float = 10.0,
    peak_freq: float = 12.0,
    cfl_fraction: float = 0.5,
    receivers: tuple[tuple[int, ...], ...] | None = None,
    source: tuple[int, ...] | None = None,
) -> WaveParams:
    """Convenience constructor: uniform medium, centered source, spread receivers."""
    ndim = len(shape)
    m = np.full(shape, 1.0 / velocity**2)
    dt = cfl_fraction * spacing * np.sqrt(m.min()) / np.sqrt(ndim)
    if source is None:
        source = tuple(s // 2 for s in shape)
    if receivers is None:
        if ndim == 1:
            xs = np.linspace(2, shape[0] - 3, 8).astype(int)
            receivers = tuple((int(x),) for x in dict.fromkeys(xs.tolist()))
        else:
            xs = np.linspace(2, shape[0] - 3, 8).astype(int)
            z = max(1, shape[1] // 4)
            receivers = tuple((int(x), z) for x in dict.fromkeys(xs.tolist()))
    return WaveParams(
        shape=tuple(shape),
        spacing=spacing,
        dt=dt,
        slowness_sq=m,
        wavelet=ricker_wavelet(nt, dt, peak_freq),
        source=tuple(source),
        receivers=receivers,
        nt=nt,
    )


def _laplacian(u: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(u)
    if u.ndim == 1:
        out[1:-1] = u[:-2] + u[2:] - 2.0 * u[1:-1]
    else:
        # per-axis pairs summed first: mirror images then produce bitwise
        # identical fields, which the symmetry checks rely on
        out[1:-1, 1:-1] = (
            (u[:-2, 1:-1] + u[2:, 1:-1])
            + (u[1:-1, :-2] + u[1:-1, 2:])
            - 4.0 * u[1:-1, 1:-1]
        )
    out /= h * h
    return out


def _interior(mask_like: np.ndarray) -> tuple[slice, ...]:
    return tuple(slice(1, -1) for _ in mask_like.shape)


def wave_forward_step(
    u_prev: np.ndarray, u_curr: np.ndarray, params: WaveParams, step: int
) -> np.ndarray:
    """One leapfrog update; boundaries stay at zero."""
    coeff = params.dt**2 / params.slowness_sq
    u_next = np.zeros_like(u_curr)
    inner = _interior(u_curr)
    lap = _laplacian(u_curr, params.spacing)
    u_next[inner] = (
        2.0 * u_curr[inner] - u_prev[inner] + coeff[inner] * lap[inner]
    )
    u_next[params.source] += coeff[params.source] * params.wavelet[step]
    return u_next


def wave_adjoint_step(
    lam: np.ndarray,
    lam_older: np.ndarray,
    residual: np.ndarray,
    params: WaveParams,
) -> np.ndarray:
    """Exact transpose of the forward update with residuals injected at receivers."""
    coeff = params.dt**2 / params.slowness_sq
    lam_prev = np.zeros_like(lam)
    inner = _interior(lam)
    lap = _laplacian(coeff * lam, params.spacing)
    lam_prev[inner] = 2.0 * lam[inner] - lam_older[inner] + lap[inner]
    for j, loc in enumerate(params.receivers):
        lam_prev[loc] += residual[j]
    return lam_prev


def misfit(d_sim: np.ndarray, d_obs: np.ndarray) -> float:
    """Half the squared l2 distance between simulated and observed data."""
    diff = np.asarray(d_sim) - np.asarray(d_obs)
    return 0.5 * float(np.vdot(diff, diff).real)


def simulate(params: WaveParams, wavelet: np.ndarray | None = None) -> np.ndarray:
    """Forward sweep recording receivers; row i holds the data after step i."""
    if wavelet is not None:
        params = replace(params, wavelet=np.asarray(wavelet, dtype=float))
    u_prev = np.zeros(params.shape)
    u_curr = np.zeros(params.shape)
    data = np.zeros((params.nt, len(params.receivers)))
    for i in range(params.nt):
        u_next = wave_forward_step(u_prev, u_curr, params, i)
        for j, loc in enumerate(params.receivers):
            data[i, j] = u_next[loc]
        u_prev, u_curr = u_curr, u_next
    return data


@dataclass(frozen=True)
class WaveAdjoint:
    """Adjoint sweep state: two adjoint field levels plus running outputs."""

    lam: np.ndarray
    lam_older: np.ndarray
    gradient: np.ndarray
    misfit_value: float


class Stepper(Protocol):
    """What ``execute`` needs from a forward/adjoint operator pair."""

    nsteps: int

    def initial_state(self) -> np.ndarray: ...

    def initial_adjoint(self): ...

    def forward(self, state: np.ndarray, step: int) -> np.ndarray: ...

    def adjoint(self, adj, state: np.ndarray, state_next: np.ndarray, step: int): ...


class WaveStepper:
    """Wave operator in executor form; states are (u_prev, u_curr) pairs.

    ``d_obs`` defaults to all zeros, which turns the misfit into the plain
    data energy; any fixed array of shape (nt, nreceivers) works.
    """

    def __init__(self, params: WaveParams, d_obs: np.ndarray | None = None):
        self.params = params
        self.nsteps = params.nt
        if d_obs is None:
            d_obs = np.zeros((params.nt, len(params.receivers)))
        d_obs = np.asarray(d_obs, dtype=float)
        if d_obs.shape != (params.nt, len(params.receivers)):
            raise InvalidArgumentError(
                f"d_obs must have shape ({params.nt}, {len(params.receivers)})"
            )
        self.d_obs = d_obs

    def initial_state(self) -> np.ndarray:
        return np.zeros((2, *self.params.shape))

    def initial_adjoint(self) -> WaveAdjoint:
        z = np.zeros(self.params.shape)
        return WaveAdjoint(z, z.copy(), np.zeros(self.params.shape), 0.0)

    def forward(self, state: np.ndarray, step: int) -> np.ndarray:
        u_next = wave_forward_step(state[0], state[1], self.params, step)
        return np.stack([state[1], u_next])

    def adjoint(
        self, adj: WaveAdjoint, state: np.ndarray, state_next: np.ndarray, step: int
    ) -> WaveAdjoint:
        u_before, u_at = state[0], state[1]
        u_after = state_next[1]
        residual = np.array([u_after[loc] for loc in self.params.receivers])
        residual -= self.d_obs[step]
        lam_prev = wave_adjoint_step(adj.lam, adj.lam_older, residual, self.params)
        gradient = adj.gradient - lam_prev * (
            (u_after - 2.0 * u_at + u_before) / self.params.slowness_sq
        )
        mis = adj.misfit_value + 0.5 * float(residual @ residual)
        return WaveAdjoint(lam_prev, adj.lam, gradient, mis)


def reference_adjoint(stepper: Stepper):
    """Full-storage adjoint: keep every forward state, then sweep backwards."""
    states = [stepper.initial_state()]
    for i in range(stepper.nsteps):
        states.append(stepper.forward(states[-1], i))
    adj = stepper.initial_adjoint()
    for i in reversed(range(stepper.nsteps)):
        adj = stepper.adjoint(adj, states[i], states[i + 1], i)
    return adj


def adjoint_source_series(params: WaveParams, residuals: np.ndarray) -> np.ndarray:
    """Transpose of ``simulate``: data-space residuals back to source amplitudes."""
    residuals = np.asarray(residuals, dtype=float)
    lam = np.zeros(params.shape)
    lam_older = np.zeros(params.shape)
    coeff = params.dt**2 / params.slowness_sq
    out = np.zeros(params.nt)
    for i in reversed(range(params.nt)):
        lam_prev = wave_adjoint_step(lam, lam_older, residuals[i], params)
        out[i] = coeff[params.source] * lam_prev[params.source]
        lam, lam_older = lam_prev, lam
    return out


def dot_test(params: WaveParams, trials: int = 20, seed: int = 0) -> float:
    """Max relative mismatch of <A w, r> vs <w, A^T r> over random draws."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        w = rng.normal(size=params.nt)
        r = rng.normal(size=(params.nt, len(params.receivers)))
        d = simulate(params, wavelet=w)
        g = adjoint_source_series(params, r)
        lhs = float(np.vdot(d, r).real)
        rhs = float(np.vdot(w, g).real)
        denom = float(np.linalg.norm(d) * np.linalg.norm(r)) or 1.0
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst


# ---------------------------------------------------------------------------
# Schedule execution
# ---------------------------------------------------------------------------


@dataclass
class ExecutionStats:
    primal_steps: int = 0
    adjoint_steps: int = 0
    store_puts: int = 0
    store_gets: int = 0
    advance_seconds: float = 0.0
    capture_seconds: float = 0.0
    adjoint_seconds: float = 0.0
    store_put_seconds: float = 0.0
    store_get_seconds: float = 0.0

    @property
    def forward_step_seconds(self) -> float:
        if self.primal_steps == 0:
            return 0.0
        return (self.advance_seconds + self.capture_seconds) / self.primal_steps

    @property
    def adjoint_step_seconds(self) -> float:
        if self.adjoint_steps == 0:
            return 0.0
        return self.adjoint_seconds / self.adjoint_steps


@dataclass
class ExecutionResult:
    adjoint: object
    stats: ExecutionStats


def execute(
    actions: list[ScheduleAction],
    stepper: Stepper,
    store: CheckpointStore,
    codec: Codec,
) -> ExecutionResult:
    """Run an adjoint sweep by following a schedule action stream.

    Store and codec failures abort with the schedule position attached.
    """
    n = stepper.nsteps
    stats = ExecutionStats()
    cur_step = 0
    cur_state = stepper.initial_state()
    upper: tuple[int, np.ndarray] | None = None
    adj = stepper.initial_adjoint()
    next_adjoint = n - 1
    put0 = store.counters.put_seconds
    get0 = store.counters.get_seconds

    def fail(i: int, why: str) -> ExecutionError:
        return ExecutionError(f"schedule action {i}: {why}")

    for i, act in enumerate(actions):
        if isinstance(act, Advance):
            if cur_step != act.from_step:
                raise fail(i, f"advance from {act.from_step} but live state is {cur_step}")
            t0 = time.perf_counter()
            for k in range(act.from_step, act.to_step):
                cur_state = stepper.forward(cur_state, k)
            stats.advance_seconds += time.perf_counter() - t0
            stats.primal_steps += act.to_step - act.from_step
            cur_step = act.to_step
            upper = None
        elif isinstance(act, Store):
            if cur_step != act.state:
                raise fail(i, f"store of state {act.state} but live state is {cur_step}")
            try:
                store.put(act.slot, act.state, cur_state, codec)
            except AdjCkptError as exc:
                raise fail(i, f"store slot {act.slot}: {exc}") from exc
            stats.store_puts += 1
        elif isinstance(act, Restore):
            try:
                step, state = store.get(act.slot, codec)
            except AdjCkptError as exc:
                raise fail(i, f"restore slot {act.slot}: {exc}") from exc
            if step != act.state:
                raise fail(i, f"slot {act.slot} holds state {step}, schedule expected {act.state}")
            cur_step, cur_state = step, state
            if upper is not None and upper[0] != cur_step + 1:
                upper = None
            stats.store_gets += 1
        elif isinstance(act, PrimalCapture):
            if cur_step != act.step:
                raise fail(i, f"capture of step {act.step} but live state is {cur_step}")
            t0 = time.perf_counter()
            out = stepper.forward(cur_state, act.step)
            stats.capture_seconds += time.perf_counter() - t0
            stats.primal_steps += 1
            upper = (act.step + 1, out)
        elif isinstance(act, AdjointStep):
            if act.step != next_adjoint:
                raise fail(i, f"adjoint of step {act.step}, expected {next_adjoint}")
            if cur_step != act.step or upper is None or upper[0] != act.step + 1:
                raise fail(i, f"adjoint of step {act.step} without states {act.step} and {act.step + 1}")
            t0 = time.perf_counter()
            adj = stepper.adjoint(adj, cur_state, upper[1], act.step)
            stats.adjoint_seconds += time.perf_counter() - t0
            stats.adjoint_steps += 1
            upper = (act.step, cur_state)
            next_adjoint -= 1
        elif isinstance(act, Discard):
            try:
                store.free(act.slot)
            except AdjCkptError as exc:
                raise fail(i, f"discard slot {act.slot}: {exc}") from exc
        else:
            raise fail(i, f"unknown action {act!r}")
    if next_adjoint != -1:
        raise ExecutionError(f"schedule ended with adjoint steps {next_adjoint}..0 missing")
    stats.store_put_seconds = store.counters.put_seconds - put0
    stats.store_get_seconds = store.counters.get_seconds - get0
    return ExecutionResult(adjoint=adj, stats=stats)


# ---------------------------------------------------------------------------
# Benchmark configuration (key = value text file)
# ---------------------------------------------------------------------------

_CONFIG_DEFAULTS = {
    "grid": "120x120",
    "spacing": 10.0,
    "dt": 0.0,  # 0 means: half the stability limit
    "velocity": 1500.0,
    "peak_freq": 12.0,
    "nt": 60,
    "slots": 3,
    "budget_bytes": 0.0,  # 0 means: derive from slots
    "codec": "cast",
    "tolerance": 1e-6,
}


def load_benchmark_config(path: str | Path | None) -> dict:
    """Parse the benchmark config file; missing keys fall back to defaults."""
    cfg = dict(_CONFIG_DEFAULTS)
    if path is None:
        return cfg
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in cfg:
            raise InvalidArgumentError(f"{path}:{lineno}: unknown key {key!r}")
        proto = _CONFIG_DEFAULTS[key]
        if isinstance(proto, str):
            cfg[key] = val
        elif isinstance(proto, int):
            cfg[key] = int(float(val))
        else:
            cfg[key] = float(val)
    return cfg


def params_from_config(cfg: dict) -> WaveParams:
    grid = cfg["grid"]
    shape = tuple(int(s) for s in str(grid).lower().split("x"))
    params = homogeneous_params(
        shape,
        nt=int(cfg["nt"]),
        velocity=float(cfg["velocity"]),
        spacing=float(cfg["spacing"]),
        peak_freq=float(cfg["peak_freq"]),
    )
    if float(cfg.get("dt", 0.0)) > 0:
        params = replace(
            params,
            dt=float(cfg["dt"]),
            wavelet=ricker_wavelet(params.nt, float(cfg["dt"]), float(cfg["peak_freq"])),
        )
    return params
