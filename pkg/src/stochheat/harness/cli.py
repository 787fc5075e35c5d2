"""Command-line entry point: ``stochheat run | describe | presets``.

Exit status 0 on success, 2 on invalid configuration, 3 on numerical failure.
Errors are reported on stderr as a single JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import tomli

from ..estimation import DegenerateEstimateError, EmptyReportError
from ..kernels import DomainError, QuadratureError
from ..linear_exact import NonPSDError
from ..solver import BlowUpError, ConfigError, cfl_check
from .config import PRESETS, ExperimentConfig, nonlinear_solver, preset, validate
from .run import run

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _error(kind: str, exc: BaseException, **extra) -> dict:
    rec = {"status": "error", "kind": kind, "type": type(exc).__name__, "message": str(exc)}
    rec.update({k: v for k, v in extra.items() if v is not None})
    return rec


def _load(args) -> ExperimentConfig:
    if args.config and args.preset:
        raise ConfigError("give either --config or --preset, not both", "config")
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required", "config")
    return cfg.with_overrides(seed=getattr(args, "seed", None), replications=getattr(args, "replications", None),
                              threads=getattr(args, "threads", None), out=getattr(args, "out", None))


def _fmt_bytes(n: float) -> str:
    for unit in ("B", "KiB", "MiB", "GiB"):
        if n < 1024 or unit == "GiB":
            return f"{n:.1f} {unit}"
        n /= 1024


def describe(cfg: ExperimentConfig) -> str:
    validate(cfg)
    lines = [f"kind             {cfg.kind}", f"name             {cfg.name}", f"seed             {cfg.seed}",
             f"replications     {cfg.replications}", f"threads          {cfg.threads}",
             f"config hash      {cfg.config_hash()}"]
    k = cfg.kind
    if k == "oracle-check":
        o = cfg.section("oracle")
        lines.append(f"argument grid    {o.points} x {o.points} per family, t in [{o.t_min}, {o.t_max}], "
                     f"|x-y| in [0, {o.d_max}]")
        lines.append(f"quadratures      {2 * o.points * o.points}")
        return "\n".join(lines) + "\n"
    e = cfg.section("estimate") if k in ("estimate", "rate-study") else None
    if k in ("linear-variation", "rate-study") or (e is not None and e.source == "linear"):
        lin = cfg.section("linear")
        n = max(e.n_list) if k == "rate-study" else lin.n
        where = f"t = {lin.t}" if lin.axis == "space" else "fixed position"
        lines.append(f"{lin.axis} grid       [{lin.lo}, {lin.hi}], n = {n} partitions, spacing {(lin.hi - lin.lo) / n!r} ({where})")
        lines.append(f"alpha, sigma     {lin.alpha}, {lin.sigma}")
        if k == "linear-variation":
            lines.append(f"scan n           {list(lin.n_scan)}")
        if e is not None:
            lines.append(f"estimator        {e.method}, n = {list(e.n_list) if k == 'rate-study' else e.n}")
        size = n + 1
        lines.append(f"memory estimate  {_fmt_bytes(2 * 8 * size * size + 8 * size * max(cfg.replications, 1))}"
                     " (covariance + factor + paths)")
        return "\n".join(lines) + "\n"
    s = nonlinear_solver(cfg)
    v = cfg.section("variation")
    rep = cfl_check(s)
    updates = s.n_steps * s.n_active
    lines += [
        f"domain           [{s.a}, {s.b}], bc {s.bc}, nx = {s.nx}, dx = {s.dx!r}, nodes = {s.n_nodes}",
        f"time             dt = {s.dt!r}, t_end = {s.t_end!r}, steps = {s.n_steps}, scheme {s.scheme}",
        f"stability        2 alpha dt / dx^2 = {rep.ratio:.6g} ({'ok' if rep.ok else 'VIOLATION'})"
        + (f"; {rep.advisory}" if rep.advisory else ""),
        f"sigma            {s.sigma}",
        f"drift            {s.drift}",
    ]
    for (step, dist), t in zip(s.snapshot_steps(), s.snapshot_times):
        lines.append(f"snapshot         t = {t!r} -> step {step} (snapping distance {dist:.3g})")
    for (j, dist), x in zip(s.trace_nodes(), s.trace_positions):
        lines.append(f"trace            x = {x!r} -> node {j} at {float(s.nodes[j])!r} (snapping distance {dist:.3g})")
    rows = s.n_steps // s.trace_every + 1
    lines.append(f"trace resolution every {s.trace_every} steps = {s.trace_every * s.dt!r}, {rows} rows")
    lines.append(f"space window     {v.window_cells} cells = {v.window_cells * s.dx!r} over {list(v.space_interval)}")
    lines.append(f"time partition   n = {v.time_n} over {list(v.time_interval)}")
    lines.append(f"cell updates     {updates:.4g} per replication, {updates * cfg.replications:.4g} total")
    mem = 8 * (3 * s.n_nodes + 16 * s.n_active + rows * len(s.trace_positions)
               + len(s.snapshot_times) * s.n_nodes)
    lines.append(f"memory estimate  {_fmt_bytes(mem)} per replication")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stochheat", description="Stochastic heat equation experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "describe"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="experiment TOML file")
        sp.add_argument("--preset", help="named preset instead of a file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--replications", type=int)
        sp.add_argument("--threads", type=int)
        if name == "run":
            sp.add_argument("--out", help="output directory")
    sp = sub.add_parser("presets", help="list presets, or print one as TOML")
    sp.add_argument("name", nargs="?")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "presets":
            if args.name:
                sys.stdout.write(preset(args.name).to_toml())
            else:
                for name, (desc, _) in PRESETS.items():
                    print(f"{name:20s} {desc}")
            return EXIT_OK
        cfg = _load(args)
        if args.command == "describe":
            sys.stdout.write(describe(cfg))
            return EXIT_OK
        res = run(cfg)
        sys.stdout.write(res.summary)
        return EXIT_OK
    except (BlowUpError, QuadratureError, DegenerateEstimateError, NonPSDError, FloatingPointError) as exc:
        # NonPSDError is a ValueError, so this clause must come first
        print(json.dumps(_error("numerical", exc)), file=sys.stderr)
        return EXIT_NUMERICAL
    except tomli.TOMLDecodeError as exc:
        rec = _error("parse", exc)
    except ConfigError as exc:
        bound = exc.bound if exc.bound is None or math.isfinite(exc.bound) else None
        rec = _error("validation", exc, field=exc.field, bound=bound)
    except (OSError, EmptyReportError, DomainError, TypeError, ValueError) as exc:
        rec = _error("validation", exc)
    print(json.dumps(rec), file=sys.stderr)
    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
