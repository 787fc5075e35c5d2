"""Time stepping for the nonlinear equation on a bounded interval.

White noise is discretized by cell averages: on a ``dx x dt`` cell the average
of the noise is normal with variance ``1 / (dx dt)``, so a node receives
``sigma(X) * xi * sqrt(dt / dx)`` per step. Neumann end nodes own a half cell
and get ``sqrt(2 dt / dx)``.
"""
from __future__ import annotations

import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from ..rng import NoiseStream
from . import _fast
from .config import ConfigError, SolverConfig, cfl_check

# steps per noise draw in simulate(); does not affect results
CHUNK = 16


class BlowUpError(FloatingPointError):
    def __init__(self, step: int, time: float):
        super().__init__(f"non-finite value at step {step} (t={time:.6g})")
        self.step = step
        self.time = time


@dataclass
class FieldState:
    time: float
    values: np.ndarray
    step: int = 0
    clamp_count: int = 0

    def copy(self) -> "FieldState":
        return FieldState(self.time, self.values.copy(), self.step, self.clamp_count)


@dataclass
class SpaceTimeRecord:
    """Output of :func:`simulate`.

    ``traces[j]`` holds values at ``trace_nodes[j]`` for the times in
    ``trace_times``.
    """

    snapshots: list  # [(time, FieldState)]
    trace_times: np.ndarray
    traces: np.ndarray  # (len(trace_times), n_positions)
    trace_nodes: list  # [(node index, snapping distance)]
    snapshot_snapping: list  # [(step, snapping distance)]
    clamp_count: int
    total_updates: int
    provenance: tuple
    config_hash: str = ""
    nodes: np.ndarray = field(default_factory=lambda: np.empty(0))

    def snapshot(self, t: float) -> FieldState:
        """Snapshot closest to ``t``."""
        best = min(self.snapshots, key=lambda pair: abs(pair[0] - t))
        return best[1]

    def trace(self, position_index: int = 0) -> np.ndarray:
        return self.traces[:, position_index]


def _noise_scale(cfg: SolverConfig) -> np.ndarray:
    s = np.full(cfg.n_active, math.sqrt(cfg.dt / cfg.dx))
    if cfg.bc == "neumann":
        s[0] = s[-1] = math.sqrt(2 * cfg.dt / cfg.dx)
    return s


def _neighbours(u: np.ndarray, bc: str):
    if bc == "periodic":
        return np.roll(u, 1), np.roll(u, -1)
    left = np.empty_like(u)
    right = np.empty_like(u)
    left[1:] = u[:-1]
    right[:-1] = u[1:]
    # neumann ghost nodes reflect; dirichlet ends are never read
    left[0] = u[1]
    right[-1] = u[-2]
    return left, right


def prepare(cfg: SolverConfig, X0) -> FieldState:
    """Validate ``X0`` against ``cfg`` and return the initial state."""
    X0 = np.array(X0, dtype=float)
    if X0.ndim == 0:
        X0 = np.full(cfg.n_nodes, float(X0))
    if X0.shape != (cfg.n_nodes,):
        raise ConfigError(f"X0 has shape {X0.shape}, grid needs ({cfg.n_nodes},)", "X0")
    if not np.all(np.isfinite(X0)):
        raise ConfigError("X0 must be finite", "X0")
    if cfg.sigma.kind == "power" and np.any(X0 < 0):
        raise ConfigError("power sigma requires nonnegative initial data", "X0")
    if cfg.bc == "dirichlet":
        X0[0] = X0[-1] = cfg.bc_value
    return FieldState(0.0, X0)


def step_explicit(state: FieldState, cfg: SolverConfig, noise: np.ndarray) -> FieldState:
    """One forward-Euler step; ``noise`` has one standard normal per active node."""
    u = state.values
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (cfg.n_active,):
        raise ValueError(f"noise must have length {cfg.n_active}")
    left, right = _neighbours(u, cfg.bc)
    r = cfg.alpha * cfg.dt / cfg.dx**2
    act = cfg.active
    ua = u[act]
    with np.errstate(over="ignore", invalid="ignore"):
        v = ua + r * (left[act] - 2.0 * ua + right[act])
        if cfg.drift.kind != "none":
            v = v + cfg.drift(ua) * cfg.dt
        v = v + cfg.sigma(ua) * noise * _noise_scale(cfg)
    return _finish(state, cfg, v)


def _finish(state, cfg, v):
    clamps = state.clamp_count
    if cfg.sigma.kind == "power":
        neg = v < 0.0
        clamps += int(np.count_nonzero(neg))
        v[neg] = 0.0
    new = state.values.copy()
    new[cfg.active] = v
    step = state.step + 1
    if not np.all(np.isfinite(new)):
        raise BlowUpError(step, step * cfg.dt)
    return FieldState(step * cfg.dt, new, step, clamps)


@functools.lru_cache(maxsize=16)
def _implicit_lu(n_nodes: int, bc: str, r: float):
    """Sparse LU of ``I - r * D2`` on the active nodes."""
    if bc == "dirichlet":
        m = n_nodes - 2
    else:
        m = n_nodes
    main = np.full(m, 1 + 2 * r)
    off = np.full(m - 1, -r)
    A = scipy.sparse.diags([off, main, off], [-1, 0, 1], format="lil")
    if bc == "periodic":
        A[0, m - 1] = -r
        A[m - 1, 0] = -r
    elif bc == "neumann":
        A[0, 1] = -2 * r
        A[m - 1, m - 2] = -2 * r
    return scipy.sparse.linalg.splu(A.tocsc())


def step_semi_implicit(state: FieldState, cfg: SolverConfig, noise: np.ndarray) -> FieldState:
    """Linear-implicit step: ``(I - alpha dt L) X_new = X + b(X) dt + sigma(X) xi sqrt(dt/dx)``."""
    u = state.values
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (cfg.n_active,):
        raise ValueError(f"noise must have length {cfg.n_active}")
    r = cfg.alpha * cfg.dt / cfg.dx**2
    ua = u[cfg.active]
    # overflow is reported as BlowUpError by _finish
    with np.errstate(over="ignore", invalid="ignore"):
        rhs = ua.copy()
        if cfg.drift.kind != "none":
            rhs = rhs + cfg.drift(ua) * cfg.dt
        rhs = rhs + cfg.sigma(ua) * noise * _noise_scale(cfg)
        if cfg.bc == "dirichlet":
            rhs[0] += r * u[0]
            rhs[-1] += r * u[-1]
        lu = _implicit_lu(cfg.n_nodes, cfg.bc, r)
        v = lu.solve(rhs)
    return _finish(state, cfg, v)


def _validate(cfg: SolverConfig):
    rep = cfl_check(cfg)
    if not rep.ok:
        raise ConfigError(rep.advisory, "dt", rep.max_dt)


def simulate(cfg: SolverConfig, X0, replicate: int = 0) -> SpaceTimeRecord:
    """Integrate from ``X0`` to ``cfg.t_end`` recording snapshots and traces.

    Deterministic in ``(cfg, X0, replicate)``: step ``k`` (0-based) uses draws
    ``k * n_active ... (k + 1) * n_active - 1`` of
    ``NoiseStream(cfg.seed, cfg.stream, replicate)``.
    """
    _validate(cfg)
    state = prepare(cfg, X0)
    noise = NoiseStream(cfg.seed, cfg.stream, replicate)
    n_steps = cfg.n_steps
    snaps = cfg.snapshot_steps()
    # the final state is always recorded
    snap_steps = sorted({k for k, _ in snaps} | {n_steps})
    tnodes = cfg.trace_nodes()
    trace_idx = np.array([j for j, _ in tnodes], dtype=np.int64)
    n_rows = n_steps // cfg.trace_every + 1
    traces = np.empty((n_rows, len(trace_idx)))
    traces[0] = state.values[trace_idx] if len(trace_idx) else traces[0]
    trace_times = np.arange(n_rows) * (cfg.trace_every * cfg.dt)

    snapshots = []
    if 0 in snap_steps:
        snapshots.append((0.0, state.copy()))
    stops = [k for k in snap_steps if k > 0]
    buf = np.empty((CHUNK, cfg.n_active))
    u = state.values
    work = np.empty_like(u)
    step = 0
    clamps = 0
    bc, sk, sc, sq, beta, dk, dkk = _fast.codes(cfg)
    r = cfg.alpha * cfg.dt / cfg.dx**2
    scale = math.sqrt(cfg.dt / cfg.dx)
    scale_end = math.sqrt(2 * cfg.dt / cfg.dx)
    for stop in stops:
        while step < stop:
            k = min(CHUNK, stop - step)
            z = buf[:k]
            noise.fill(z, start=step * cfg.n_active)
            if cfg.scheme == "explicit":
                c, bad = _fast.explicit_steps(u, work, z, step, r, cfg.dt, scale, scale_end, bc,
                                              sk, sc, sq, beta, dk, dkk, trace_idx, traces,
                                              cfg.trace_every)
                clamps += c
                if bad >= 0:
                    raise BlowUpError(bad, bad * cfg.dt)
            else:
                st = FieldState(step * cfg.dt, u, step, clamps)
                for i in range(k):
                    st = step_semi_implicit(st, cfg, z[i])
                    if len(trace_idx) and st.step % cfg.trace_every == 0:
                        traces[st.step // cfg.trace_every] = st.values[trace_idx]
                u[:] = st.values
                clamps = st.clamp_count
            step += k
        if step in snap_steps:
            snapshots.append((step * cfg.dt, FieldState(step * cfg.dt, u.copy(), step, clamps)))

    return SpaceTimeRecord(
        snapshots=snapshots,
        trace_times=trace_times,
        traces=traces,
        trace_nodes=tnodes,
        snapshot_snapping=snaps,
        clamp_count=clamps,
        total_updates=n_steps * cfg.n_active,
        provenance=noise.provenance,
        config_hash=cfg.config_hash(),
        nodes=cfg.nodes,
    )


def run_replications(cfg: SolverConfig, X0, replicates, threads: int = 1) -> list[SpaceTimeRecord]:
    """``simulate`` for each replicate index; output order follows ``replicates``."""
    replicates = list(replicates)
    _fast.warmup()
    if threads <= 1:
        return [simulate(cfg, X0, r) for r in replicates]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: simulate(cfg, X0, r), replicates))
