"""Coefficient families, solver configuration and the stability check."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import _fastmath
from ..rng import SOLVER_STREAM


def _sin(x):
    # same polynomial sine as the compiled solver loop, so both paths agree bitwise
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    _fastmath.sin_array(x.reshape(-1), out.reshape(-1))
    return out


class ConfigError(ValueError):
    """Invalid solver or experiment configuration.

    ``field`` names the offending key; ``bound`` carries the admissible limit
    when there is one.
    """

    def __init__(self, message: str, field: str | None = None, bound: float | None = None):
        super().__init__(message)
        self.field = field
        self.bound = bound


SIGMA_KINDS = ("constant", "affine", "smooth", "power")
DRIFT_KINDS = ("none", "linear", "sine")


@dataclass(frozen=True)
class SigmaSpec:
    """Noise coefficient sigma(x).

    ``constant``: ``c``; ``affine``: ``c + q x``; ``smooth``: ``c + q sin(x)``;
    ``power``: ``max(x, 0) ** beta`` with ``0 < beta < 1``.
    """

    kind: str = "constant"
    c: float = 1.0
    q: float = 0.0
    beta: float = 0.5

    def __post_init__(self):
        if self.kind not in SIGMA_KINDS:
            raise ConfigError(f"unknown sigma kind {self.kind!r}", "sigma.kind")
        if self.kind == "constant" and self.c < 0:
            raise ConfigError("constant sigma must be >= 0", "sigma.c")
        if self.kind == "power" and not 0 < self.beta < 1:
            raise ConfigError("power sigma needs 0 < beta < 1", "sigma.beta")

    @classmethod
    def constant(cls, c: float) -> "SigmaSpec":
        return cls("constant", c=c)

    @classmethod
    def affine(cls, p: float, q: float) -> "SigmaSpec":
        return cls("affine", c=p, q=q)

    @classmethod
    def smooth(cls, c0: float, c1: float) -> "SigmaSpec":
        return cls("smooth", c=c0, q=c1)

    @classmethod
    def power(cls, beta: float) -> "SigmaSpec":
        return cls("power", beta=beta)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.c)
        if self.kind == "affine":
            return self.c + self.q * x
        if self.kind == "smooth":
            return self.c + self.q * _sin(x)
        if self.beta == 0.5:
            return np.sqrt(np.maximum(x, 0.0))
        return np.maximum(x, 0.0) ** self.beta

    @property
    def is_lipschitz(self) -> bool:
        return self.kind != "power"

    @property
    def lipschitz(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind in ("affine", "smooth"):
            return abs(self.q)
        return math.inf

    @property
    def growth(self) -> tuple[float, float]:
        """``(K0, K1)`` with ``|sigma(x)| <= K0 + K1 |x|``."""
        if self.kind == "constant":
            return (abs(self.c), 0.0)
        if self.kind == "affine":
            return (abs(self.c), abs(self.q))
        if self.kind == "smooth":
            return (abs(self.c) + abs(self.q), 0.0)
        return (1.0, 1.0)  # x^beta <= 1 + x

    @property
    def constant_value(self) -> float | None:
        if self.kind == "constant":
            return self.c
        if self.kind in ("affine", "smooth") and self.q == 0:
            return abs(self.c)
        return None


@dataclass(frozen=True)
class DriftSpec:
    """Drift b(x): ``none``, ``linear`` (``k x``) or ``sine`` (``k sin(x)``)."""

    kind: str = "none"
    k: float = 0.0

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ConfigError(f"unknown drift kind {self.kind!r}", "drift.kind")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return self.k * x
        if self.kind == "sine":
            return self.k * _sin(x)
        return np.zeros_like(x)

    @property
    def lipschitz(self) -> float:
        return 0.0 if self.kind == "none" else abs(self.k)


BCS = ("periodic", "dirichlet", "neumann")
SCHEMES = ("explicit", "semi-implicit")


@dataclass(frozen=True)
class SolverConfig:
    """Discretization of ``dX = alpha X'' dt + b(X) dt + sigma(X) dW`` on ``[a, b]``.

    ``dt`` must divide ``t_end`` (up to 1e-9 relative); snapshot times snap to
    the nearest step and trace positions to the nearest node. Traces are
    recorded every ``trace_every`` steps, starting at step 0.
    """

    alpha: float = 1.0
    a: float = 0.0
    b: float = 1.0
    nx: int = 512
    dt: float = 2.0**-20
    t_end: float = 1.0
    scheme: str = "explicit"
    bc: str = "periodic"
    bc_value: float = 0.0
    sigma: SigmaSpec = field(default_factory=SigmaSpec)
    drift: DriftSpec = field(default_factory=DriftSpec)
    snapshot_times: tuple = ()
    trace_positions: tuple = ()
    trace_every: int = 1
    seed: int = 0
    stream: int = SOLVER_STREAM

    def __post_init__(self):
        if not self.alpha >= 0 or not math.isfinite(self.alpha):
            raise ConfigError("alpha must be finite and >= 0", "alpha")
        if not self.a < self.b:
            raise ConfigError("domain needs a < b", "domain")
        if int(self.nx) != self.nx or self.nx < 2:
            raise ConfigError("nx must be an integer >= 2", "nx")
        if not self.dt > 0:
            raise ConfigError("dt must be positive", "dt")
        if self.t_end < 0:
            raise ConfigError("t_end must be >= 0", "t_end")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}", "scheme")
        if self.bc not in BCS:
            raise ConfigError(f"bc must be one of {BCS}", "bc")
        if int(self.trace_every) != self.trace_every or self.trace_every < 1:
            raise ConfigError("trace_every must be a positive integer", "trace_every")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError("dt must divide t_end", "dt")
        for t in self.snapshot_times:
            if t < 0 or t > self.t_end * (1 + 1e-12):
                raise ConfigError(f"snapshot time {t} outside [0, t_end]", "snapshot_times", self.t_end)
        for x in self.trace_positions:
            if not self.a <= x <= self.b:
                raise ConfigError(f"trace position {x} outside the domain", "trace_positions")
        # keep tuples so the config stays hashable
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))
        object.__setattr__(self, "trace_positions", tuple(float(x) for x in self.trace_positions))

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.nx

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def n_nodes(self) -> int:
        return self.nx if self.bc == "periodic" else self.nx + 1

    @property
    def nodes(self) -> np.ndarray:
        return self.a + np.arange(self.n_nodes) * self.dx

    @property
    def active(self) -> slice:
        """Nodes that are updated and receive noise."""
        if self.bc == "dirichlet":
            return slice(1, self.nx)
        return slice(0, self.n_nodes)

    @property
    def n_active(self) -> int:
        return len(range(*self.active.indices(self.n_nodes)))

    def snapshot_steps(self) -> list[tuple[int, float]]:
        """(step, snapping distance) per requested snapshot time."""
        out = []
        for t in self.snapshot_times:
            k = int(round(t / self.dt))
            out.append((k, abs(k * self.dt - t)))
        return out

    def trace_nodes(self) -> list[tuple[int, float]]:
        """(node index, snapping distance) per requested trace position."""
        out = []
        for x in self.trace_positions:
            j = int(round((x - self.a) / self.dx))
            if self.bc == "periodic":
                j %= self.nx
            dist = abs(self.a + j * self.dx - x)
            if self.bc == "periodic":
                dist = min(dist, (self.b - self.a) - dist)
            out.append((j, dist))
        return out

    def check_interval(self, lo: float, hi: float, guard: float = 0.1) -> None:
        """Estimator windows keep ``guard * length`` away from non-periodic boundaries."""
        if not self.a <= lo < hi <= self.b:
            raise ConfigError(f"interval [{lo}, {hi}] not inside the domain", "interval")
        if self.bc == "periodic":
            return
        band = guard * (self.b - self.a)
        if lo < self.a + band - 1e-12 or hi > self.b - band + 1e-12:
            raise ConfigError(
                f"interval [{lo}, {hi}] enters the {guard:.0%} boundary guard band", "interval", band
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        d["trace_positions"] = list(self.trace_positions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        d = dict(d)
        d["sigma"] = SigmaSpec(**d.get("sigma", {}))
        d["drift"] = DriftSpec(**d.get("drift", {}))
        d["snapshot_times"] = tuple(d.get("snapshot_times", ()))
        d["trace_positions"] = tuple(d.get("trace_positions", ()))
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class CFLReport:
    ok: bool
    ratio: float  # 2 alpha dt / dx^2
    max_dt: float
    advisory: str = ""

    def __bool__(self):
        return self.ok


def cfl_check(cfg: SolverConfig) -> CFLReport:
    """Stability of the explicit scheme: ``2 alpha dt / dx^2 <= 1``.

    The semi-implicit scheme always passes; it carries an advisory when
    ``dt > dx`` since accuracy (not stability) degrades there.
    """
    dx2 = cfg.dx**2
    ratio = 2 * cfg.alpha * cfg.dt / dx2
    max_dt = dx2 / (2 * cfg.alpha) if cfg.alpha > 0 else math.inf
    if cfg.scheme == "semi-implicit":
        note = f"dt={cfg.dt:g} exceeds dx={cfg.dx:g}; accuracy may suffer" if cfg.dt > cfg.dx else ""
        return CFLReport(True, ratio, math.inf, note)
    # tiny slack so dt = dx^2 / (2 alpha) computed in floating point passes
    ok = ratio <= 1.0 + 1e-12
    note = "" if ok else f"explicit scheme unstable: dt={cfg.dt:.6g} > max dt={max_dt:.6g}"
    return CFLReport(ok, ratio, max_dt, note)
