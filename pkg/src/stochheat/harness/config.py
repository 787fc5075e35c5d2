"""Experiment configuration: TOML files, presets and validation."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields

import numpy as np
import tomli
import tomli_w

from ..solver.config import ConfigError, DriftSpec, SigmaSpec, SolverConfig, cfl_check
from ..variations import partition_indices

KINDS = ("oracle-check", "linear-variation", "nonlinear-variation", "estimate", "rate-study")

# TOML integers are signed 64-bit; larger seeds are written as hex strings
_I63 = 2**63


@dataclass(frozen=True)
class OracleSpec:
    """Argument grid for the quadrature-versus-closed-form check."""

    points: int = 20
    t_min: float = 0.1
    t_max: float = 4.0
    d_max: float = 2.0
    alpha: float = 1.0
    sigma: float = 1.0
    tolerance: float = 1e-8


@dataclass(frozen=True)
class LinearSpec:
    """Exact linear paths: a space grid at time ``t`` or a time grid at a fixed point."""

    axis: str = "space"
    alpha: float = 1.0
    sigma: float = 1.0
    lo: float = 0.0
    hi: float = 1.0
    t: float = 1.0
    n: int = 4096
    n_scan: tuple = (256, 1024, 4096)


@dataclass(frozen=True)
class VariationSpec:
    """Windows for variations and estimators computed from solver output."""

    snapshot_time: float = 0.25
    x0: float = 0.0  # constant initial value
    space_interval: tuple = (0.0, 1.0)
    window_cells: int = 16
    trace_x: float = 0.5
    time_interval: tuple = (0.125, 0.25)
    time_n: int = 512
    space_tol: float = 0.10
    time_tol: float = 0.15
    guard: float = 0.1


@dataclass(frozen=True)
class EstimateSpec:
    method: str = "temporal"
    source: str = "linear"  # or "nonlinear"
    n: int = 4096
    n_list: tuple = (512, 2048, 8192)


_SECTIONS = {"oracle": OracleSpec, "linear": LinearSpec, "variation": VariationSpec, "estimate": EstimateSpec}

def _build(cls, d, section):
    names = {f.name for f in fields(cls)}
    extra = set(d) - names
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)} in [{section}]", f"{section}.{sorted(extra)[0]}")
    d = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
    return cls(**d)


def _parse_seed(v) -> int:
    if isinstance(v, str):
        v = int(v, 0)
    if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
    return v


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    name: str = ""
    seed: int = 0
    replications: int = 1
    threads: int = 1
    out: str = "out"
    solver: SolverConfig | None = None
    oracle: OracleSpec | None = None
    linear: LinearSpec | None = None
    variation: VariationSpec | None = None
    estimate: EstimateSpec | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}", "kind")
        object.__setattr__(self, "seed", _parse_seed(self.seed))
        if int(self.replications) != self.replications or self.replications < 0:
            raise ConfigError("replications must be a non-negative integer", "replications")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ConfigError("threads must be a positive integer", "threads")
        if self.solver is not None and self.solver.seed != self.seed:
            # one seed per experiment; the solver inherits it
            object.__setattr__(self, "solver", dataclasses.replace(self.solver, seed=self.seed))

    # sections fall back to defaults when absent
    def section(self, name):
        v = getattr(self, name)
        if v is not None:
            return v
        return SolverConfig(seed=self.seed) if name == "solver" else _SECTIONS[name]()

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "name": self.name,
             "seed": self.seed if self.seed < _I63 else hex(self.seed),
             "replications": self.replications, "threads": self.threads, "out": self.out}
        if self.solver is not None:
            s = self.solver.to_dict()
            s.pop("seed")
            d["solver"] = s
        for name in _SECTIONS:
            sec = getattr(self, name)
            if sec is not None:
                d[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(sec).items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        top = {"kind", "name", "seed", "replications", "threads", "out", "solver", *_SECTIONS}
        extra = set(d) - top
        if extra:
            raise ConfigError(f"unknown top-level key(s) {sorted(extra)}", sorted(extra)[0])
        if "kind" not in d:
            raise ConfigError("missing 'kind'", "kind")
        seed = _parse_seed(d.get("seed", 0))
        d["seed"] = seed
        if "solver" in d:
            s = dict(d["solver"])
            s["seed"] = seed
            try:
                s["sigma"] = _build(SigmaSpec, s.get("sigma", {}), "solver.sigma")
                s["drift"] = _build(DriftSpec, s.get("drift", {}), "solver.drift")
                d["solver"] = _build(SolverConfig, s, "solver")
            except TypeError as exc:
                raise ConfigError(str(exc), "solver") from exc
        for name, sec in _SECTIONS.items():
            if name in d:
                d[name] = _build(sec, d[name], name)
        return cls(**d)

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(tomli.loads(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomli.load(fh))

    def config_hash(self) -> str:
        """sha256 of the experiment definition; excludes thread count and output path."""
        d = self.to_dict()
        d.pop("threads")
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return dataclasses.replace(self, **kw) if kw else self


def nonlinear_solver(cfg: ExperimentConfig) -> SolverConfig:
    """Solver config with the snapshot and trace the analysis needs."""
    s = cfg.section("solver")
    v = cfg.section("variation")
    snaps = tuple(sorted(set(s.snapshot_times) | {v.snapshot_time}))
    traces = s.trace_positions if v.trace_x in s.trace_positions else s.trace_positions + (v.trace_x,)
    return dataclasses.replace(s, snapshot_times=snaps, trace_positions=traces)


def validate(cfg: ExperimentConfig) -> None:
    """Raise ConfigError for anything that would fail or mislead at run time."""
    k = cfg.kind
    if k == "oracle-check":
        o = cfg.section("oracle")
        if o.points < 2 or not 0 < o.t_min < o.t_max or o.d_max < 0:
            raise ConfigError("oracle grid needs points >= 2, 0 < t_min < t_max, d_max >= 0", "oracle")
        if not (o.alpha > 0 and o.sigma >= 0):
            raise ConfigError("oracle needs alpha > 0 and sigma >= 0", "oracle.alpha")
        return
    if k in ("linear-variation", "rate-study") or (k == "estimate" and cfg.section("estimate").source == "linear"):
        lin = cfg.section("linear")
        if lin.axis not in ("space", "time"):
            raise ConfigError("linear.axis must be 'space' or 'time'", "linear.axis")
        if not (lin.alpha > 0 and lin.sigma >= 0):
            raise ConfigError("linear needs alpha > 0 and sigma >= 0", "linear.alpha")
        if not lin.lo < lin.hi or (lin.axis == "time" and not lin.lo > 0):
            raise ConfigError("linear grid needs lo < hi (and lo > 0 in time)", "linear.lo")
        if lin.axis == "space" and not lin.t > 0:
            raise ConfigError("linear.t must be positive", "linear.t")
        if k == "linear-variation":
            if any(lin.n % m for m in lin.n_scan):
                raise ConfigError("every n_scan entry must divide linear.n", "linear.n_scan")
    if k in ("estimate", "rate-study"):
        e = cfg.section("estimate")
        if e.method not in ("temporal", "spatial"):
            raise ConfigError("estimate.method must be 'temporal' or 'spatial'", "estimate.method")
        if e.source not in ("linear", "nonlinear"):
            raise ConfigError("estimate.source must be 'linear' or 'nonlinear'", "estimate.source")
        if k == "rate-study":
            if e.source != "linear":
                raise ConfigError("rate study runs on exact linear paths only", "estimate.source")
            if not e.n_list or any(max(e.n_list) % m for m in e.n_list):
                raise ConfigError("every n_list entry must divide the largest", "estimate.n_list")
        elif e.source == "linear" and (cfg.section("linear").axis == "space") != (e.method == "spatial"):
            raise ConfigError("linear.axis must match estimate.method", "linear.axis")
    if k == "nonlinear-variation" or (k == "estimate" and cfg.section("estimate").source == "nonlinear"):
        _validate_nonlinear(cfg)


def _validate_nonlinear(cfg: ExperimentConfig) -> None:
    s = nonlinear_solver(cfg)
    v = cfg.section("variation")
    rep = cfl_check(s)
    if not rep.ok:
        raise ConfigError(rep.advisory, "solver.dt", rep.max_dt)
    if v.window_cells < 8:
        raise ConfigError("spatial window must span at least 8 cells", "variation.window_cells", 8)
    lo, hi = v.space_interval
    s.check_interval(lo, hi, v.guard)
    window = v.window_cells * s.dx
    n = (hi - lo) / window
    if abs(n - round(n)) > 1e-9 * max(n, 1):
        raise ConfigError(f"window {window:g} does not divide [{lo}, {hi}]", "variation.window_cells")
    snapped = [d for k, d in s.snapshot_steps() if abs(k * s.dt - v.snapshot_time) <= s.dt / 2]
    if not snapped or snapped[0] > 1e-12 * max(1.0, v.snapshot_time):
        raise ConfigError("snapshot_time is not a multiple of dt", "variation.snapshot_time")
    T1, T2 = v.time_interval
    if not 0 < T1 < T2 <= s.t_end * (1 + 1e-12):
        raise ConfigError("time_interval must satisfy 0 < T1 < T2 <= t_end", "variation.time_interval")
    record = s.trace_every * s.dt
    grid = np.arange(s.n_steps // s.trace_every + 1) * record
    partition_indices(grid, T1, T2, v.time_n)
    if (T2 - T1) / v.time_n < 8 * record * (1 - 1e-9):
        raise ConfigError("time window must span at least 8 recorded steps", "variation.time_n", 8)
    if not s.a <= v.trace_x <= s.b:
        raise ConfigError("trace_x outside the domain", "variation.trace_x")


def _nonlinear_base(**kw) -> SolverConfig:
    nx = kw.pop("nx", 1024)
    dx = 1.0 / nx
    base = dict(alpha=1.0, a=0.0, b=1.0, nx=nx, dt=dx * dx / 4, t_end=0.25, bc="periodic",
                sigma=SigmaSpec.smooth(2.0, 1.0), trace_every=64)
    base.update(kw)
    return SolverConfig(**base)


def _presets() -> dict:
    nl = _nonlinear_base()
    return {
        "oracle": ("covariance quadrature against the closed forms",
                   ExperimentConfig("oracle-check", name="oracle", oracle=OracleSpec(), out="out/oracle")),
        "prop1": ("exact linear paths, quadratic variation in space on [0,1] at t=1",
                  ExperimentConfig("linear-variation", name="prop1", replications=500, out="out/prop1",
                                   linear=LinearSpec("space", lo=0.0, hi=1.0, t=1.0, n=4096))),
        "prop2": ("exact linear paths, quartic variation in time on [1,2]",
                  ExperimentConfig("linear-variation", name="prop2", replications=500, out="out/prop2",
                                   linear=LinearSpec("time", lo=1.0, hi=2.0, n=4096))),
        "thm1": ("nonlinear solver, sigma = 2 + sin, spatial quadratic variation at t=0.25",
                 ExperimentConfig("nonlinear-variation", name="thm1", replications=20, out="out/thm1",
                                  solver=nl, variation=VariationSpec())),
        "thm2": ("nonlinear solver, sigma = 2 + sin, temporal quartic variation at x=0.5",
                 ExperimentConfig("nonlinear-variation", name="thm2", replications=20, out="out/thm2",
                                  solver=nl, variation=VariationSpec())),
        "nonlinear-default": ("nonlinear solver at dx=2^-9, dt=dx^2/4, T=1 (budgeting reference)",
                              ExperimentConfig("nonlinear-variation", name="nonlinear-default",
                                               replications=1, out="out/nonlinear-default",
                                               solver=_nonlinear_base(nx=512, t_end=1.0, trace_every=16),
                                               variation=VariationSpec())),
        "estimate-temporal": ("temporal alpha estimator on exact linear paths, alpha=2",
                              ExperimentConfig("estimate", name="estimate-temporal", replications=20,
                                               out="out/estimate-temporal",
                                               linear=LinearSpec("time", alpha=2.0, lo=1.0, hi=2.0, n=4096),
                                               estimate=EstimateSpec("temporal", "linear", 4096))),
        "estimate-spatial": ("spatial alpha estimator on exact linear paths, alpha=2",
                             ExperimentConfig("estimate", name="estimate-spatial", replications=20,
                                              out="out/estimate-spatial",
                                              linear=LinearSpec("space", alpha=2.0, lo=0.0, hi=1.0, n=4096),
                                              estimate=EstimateSpec("spatial", "linear", 4096))),
        "rate": ("clipped estimator error against n on exact linear paths",
                 ExperimentConfig("rate-study", name="rate", replications=50, out="out/rate",
                                  linear=LinearSpec("time", lo=1.0, hi=2.0),
                                  estimate=EstimateSpec("temporal", "linear", 8192, (512, 2048, 8192)))),
    }


PRESETS = _presets()


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name][1]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", "preset") from None
