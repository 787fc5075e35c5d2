"""Experiment execution and artifact emission.

Outputs are staged in a sibling temporary directory and moved into place only
after every file is complete, so a failed run leaves nothing behind. Files
carry no timestamps or thread counts: the same (config, seed) yields the same
bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
import shutil
import tempfile
from dataclasses import dataclass, field

import numpy as np
import tomli_w

from ..estimation import alpha_hat_spatial, alpha_hat_temporal, rate_study, summarize
from ..kernels import CovarianceQuery, PhysicalParams, cov_equal_space, cov_equal_time, cov_oracle
from ..linear_exact import SpaceGrid, TimeGrid, build_spatial_sampler, build_temporal_sampler
from ..rng import SPATIAL_STREAM, TEMPORAL_STREAM, NoiseStream
from ..solver import SigmaSpec, run_replications
from ..variations import (
    CSV_HEADER,
    LinearPathSource,
    spatial_quadratic_report,
    temporal_quartic_report,
    variance_decreasing,
    variation_scaling_scan,
)
from .config import ExperimentConfig, nonlinear_solver, validate

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    files: dict = field(default_factory=dict)  # name -> text
    summary: str = ""
    passed: bool | None = None  # outcome of the experiment's own check, if any


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip form
    if isinstance(v, np.integer):
        return int(v)
    return v


def to_csv(header, rows, config_hash: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header) + ["config_hash"])
    for r in rows:
        w.writerow([_cell(v) for v in r] + [config_hash])
    return buf.getvalue()


def _sigma_for_linear(lin) -> SigmaSpec:
    return SigmaSpec.constant(lin.sigma)


def _linear_sampler(lin):
    params = PhysicalParams(lin.alpha, lin.sigma)
    if lin.axis == "space":
        return build_spatial_sampler(SpaceGrid(lin.lo, lin.hi, lin.n), lin.t, params), SPATIAL_STREAM
    return build_temporal_sampler(TimeGrid(lin.lo, lin.hi, lin.n), params), TEMPORAL_STREAM


def run_oracle(cfg: ExperimentConfig, h: str) -> RunResult:
    o = cfg.section("oracle")
    params = PhysicalParams(o.alpha, o.sigma)
    ts = np.linspace(o.t_min, o.t_max, o.points)
    rows = []
    for t in ts:
        for d in np.linspace(0.0, o.d_max, o.points):
            rows.append(("equal-time", t, t, 0.0, d, cov_equal_time(t, 0.0, d, params)))
        for f in np.linspace(1.0 / o.points, 1.0, o.points):
            rows.append(("equal-space", f * t, t, 0.0, 0.0, cov_equal_space(f * t, t, params)))
    out, max_abs, max_rel = [], 0.0, 0.0
    for fam, s, t, x, y, closed in rows:
        quad = cov_oracle(CovarianceQuery(s, t, x, y), params)
        ad = abs(closed - quad)
        rd = ad / abs(closed) if closed else ad
        max_abs, max_rel = max(max_abs, ad), max(max_rel, rd)
        out.append((fam, s, t, x, y, closed, quad, ad, rd))
    passed = max_rel <= o.tolerance
    summary = (f"queries          {len(out)}\n"
               f"max abs_diff     {max_abs!r}\n"
               f"max rel_diff     {max_rel!r}\n"
               f"tolerance        {o.tolerance!r}\n"
               f"pass             {passed}\n")
    header = ("family", "s", "t", "x", "y", "closed_form", "quadrature", "abs_diff", "rel_diff")
    return RunResult({"oracle.csv": to_csv(header, out, h)}, summary, passed)


def run_linear_variation(cfg: ExperimentConfig, h: str) -> RunResult:
    lin = cfg.section("linear")
    sampler, stream = _linear_sampler(lin)
    source = LinearPathSource(sampler, NoiseStream(cfg.seed, stream))
    reps = list(range(cfg.replications))
    sigma = _sigma_for_linear(lin)
    grid = sampler.grid.points
    paths = source(lin.n, reps)
    reports = []
    for r, v in zip(reps, paths):
        if lin.axis == "space":
            rep = spatial_quadratic_report(v, grid, sigma, lin.alpha, (lin.hi - lin.lo) / lin.n,
                                           (lin.lo, lin.hi), t=lin.t, seed=cfg.seed)
        else:
            rep = temporal_quartic_report(v, grid, sigma, lin.alpha, (lin.lo, lin.hi), lin.n, seed=cfg.seed)
        reports.append((r, rep))
    p = 2 if lin.axis == "space" else 4
    scan = variation_scaling_scan(source, p, lin.n_scan, reps)
    files = {
        "variation.csv": to_csv(CSV_HEADER + ("replicate",), [rep.csv_row() + (r,) for r, rep in reports], h),
        "scan.csv": to_csv(("n", "mean", "variance", "replications"),
                           [(s.n, s.mean, s.variance, s.replications) for s in scan], h),
    }
    emp = np.array([rep.empirical for _, rep in reports])
    target = reports[0][1].target if reports else math.nan
    se = float(np.std(emp, ddof=1) / math.sqrt(len(emp))) if len(emp) > 1 else math.nan
    z = (float(np.mean(emp)) - target) / se if se > 0 else math.nan
    dec = variance_decreasing(scan)
    passed = bool(abs(z) <= 4 and dec) if len(emp) > 1 else None
    summary = (f"axis             {lin.axis}\n"
               f"p                {p}\n"
               f"n                {lin.n}\n"
               f"replications     {len(emp)}\n"
               f"empirical mean   {float(np.mean(emp)) if len(emp) else math.nan!r}\n"
               f"target           {target!r}\n"
               f"standard error   {se!r}\n"
               f"z score          {z!r}\n"
               f"variance decreasing over n={list(lin.n_scan)}  {dec}\n"
               f"pass             {passed}\n")
    return RunResult(files, summary, passed)


def _simulate(cfg: ExperimentConfig):
    s = nonlinear_solver(cfg)
    v = cfg.section("variation")
    reps = list(range(cfg.replications))
    log.info("simulating %d replication(s), %d steps each", len(reps), s.n_steps)
    records = run_replications(s, v.x0, reps, threads=cfg.threads)
    return s, v, reps, records


def _field_csv(index, coord, values, h, coord_name) -> str:
    return to_csv(("index", coord_name, "value"), zip(index, coord, values), h)


def run_nonlinear_variation(cfg: ExperimentConfig, h: str) -> RunResult:
    s, v, reps, records = _simulate(cfg)
    period = (s.b - s.a) if s.bc == "periodic" else None
    window = v.window_cells * s.dx
    ti = s.trace_positions.index(v.trace_x)
    rows, sp_ok, tm_ok, clamps = [], 0, 0, 0
    for r, rec in zip(reps, records):
        snap = rec.snapshot(v.snapshot_time)
        sp = spatial_quadratic_report(snap.values, rec.nodes, s.sigma, s.alpha, window, v.space_interval,
                                      period=period, t=snap.time, seed=cfg.seed)
        tm = temporal_quartic_report(rec.trace(ti), rec.trace_times, s.sigma, s.alpha, v.time_interval,
                                     v.time_n, x=s.nodes[rec.trace_nodes[ti][0]], seed=cfg.seed)
        sp_ok += sp.relative_error <= v.space_tol
        tm_ok += tm.relative_error <= v.time_tol
        clamps += rec.clamp_count
        rows += [sp.csv_row() + (r,), tm.csv_row() + (r,)]
    files = {"variation.csv": to_csv(CSV_HEADER + ("replicate",), rows, h)}
    if records:
        rec = records[0]
        snap = rec.snapshot(v.snapshot_time)
        files["snapshot_r0.csv"] = _field_csv(range(len(rec.nodes)), rec.nodes, snap.values, h, "x")
        tr = rec.trace(ti)
        files["trace_r0.csv"] = _field_csv(range(len(tr)), rec.trace_times, tr, h, "t")
    n = len(reps)
    j, dist = records[0].trace_nodes[ti] if records else (None, None)
    summary = (f"replications                 {n}\n"
               f"steps per replication        {s.n_steps}\n"
               f"trace node                   {j} (snapping distance {dist!r})\n"
               f"space: within {v.space_tol:.0%}            {sp_ok}/{n}\n"
               f"time:  within {v.time_tol:.0%}            {tm_ok}/{n}\n"
               f"clamp events                 {clamps}\n")
    return RunResult(files, summary, None)


def run_estimate(cfg: ExperimentConfig, h: str) -> RunResult:
    e = cfg.section("estimate")
    reps = list(range(cfg.replications))
    if e.source == "linear":
        lin = cfg.section("linear")
        sampler, stream = _linear_sampler(lin)
        source = LinearPathSource(sampler, NoiseStream(cfg.seed, stream))
        grid = sampler.grid.points
        paths = source(lin.n, reps) if reps else []
        sigma, alpha = _sigma_for_linear(lin), lin.alpha
        if e.method == "temporal":
            est = [alpha_hat_temporal(p, grid, sigma, lin.lo, lin.hi, e.n) for p in paths]
        else:
            est = [alpha_hat_spatial(p, grid, sigma, lin.lo, lin.hi, e.n) for p in paths]
    else:
        s, v, reps, records = _simulate(cfg)
        sigma, alpha = s.sigma, s.alpha
        period = (s.b - s.a) if s.bc == "periodic" else None
        ti = s.trace_positions.index(v.trace_x)
        if e.method == "temporal":
            T1, T2 = v.time_interval
            est = [alpha_hat_temporal(rec.trace(ti), rec.trace_times, sigma, T1, T2, e.n) for rec in records]
        else:
            A1, A2 = v.space_interval
            est = [alpha_hat_spatial(rec.snapshot(v.snapshot_time).values, rec.nodes, sigma, A1, A2, e.n,
                                     period=period) for rec in records]
    report = summarize(e.method, e.n, est, alpha)
    report.config_hash = h
    files = {
        "estimates.csv": to_csv(("replicate", "alpha_hat"), zip(reps, est), h),
        "report.csv": report.to_csv(),
    }
    return RunResult(files, report.summary(), None)


def run_rate_study(cfg: ExperimentConfig, h: str) -> RunResult:
    e = cfg.section("estimate")
    lin = cfg.section("linear")
    report = rate_study(e.method, e.n_list, cfg.replications, alpha=lin.alpha, sigma=lin.sigma,
                        seed=cfg.seed, interval=(lin.lo, lin.hi), t=lin.t)
    report.config_hash = h
    return RunResult({"rate.csv": report.to_csv()}, report.summary(), report.error_decreasing)


RUNNERS = {
    "oracle-check": run_oracle,
    "linear-variation": run_linear_variation,
    "nonlinear-variation": run_nonlinear_variation,
    "estimate": run_estimate,
    "rate-study": run_rate_study,
}


def execute(cfg: ExperimentConfig) -> RunResult:
    """Validate and run ``cfg`` in memory."""
    validate(cfg)
    h = cfg.config_hash()
    res = RUNNERS[cfg.kind](cfg, h)
    head = f"config_hash {h}\nseed {cfg.seed}\nkind {cfg.kind}\nname {cfg.name}\n"
    res.summary = head + res.summary
    return res


def _canonical_toml(cfg: ExperimentConfig) -> str:
    d = cfg.to_dict()
    # neither affects results; keeping them out makes outputs byte-identical
    d.pop("threads")
    d.pop("out")
    return f"# config_hash {cfg.config_hash()}\n" + tomli_w.dumps(d)


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def manifest(cfg: ExperimentConfig, files: dict) -> str:
    h = cfg.config_hash()
    lines = [f"config_hash {h}", f"seed {cfg.seed}", f"kind {cfg.kind}",
             f"rerun stochheat run --config config.toml --seed {cfg.seed}"]
    for name in sorted(files):
        data = files[name]
        lines.append(f"file {name} sha256 {_sha(data)} bytes {len(data.encode())}")
    return "\n".join(lines) + "\n"


def write_outputs(cfg: ExperimentConfig, res: RunResult, out_dir: str) -> list[str]:
    """Atomically place all artifacts of ``res`` in ``out_dir``."""
    files = dict(res.files)
    files["summary.txt"] = res.summary
    files["config.toml"] = _canonical_toml(cfg)
    files["manifest.txt"] = manifest(cfg, files)
    out_dir = os.path.abspath(out_dir)
    parent = os.path.dirname(out_dir)
    os.makedirs(parent, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".stage-", dir=parent)
    try:
        for name, text in files.items():
            with open(os.path.join(stage, name), "w", newline="") as fh:
                fh.write(text)
        os.makedirs(out_dir, exist_ok=True)
        # manifest last: its presence marks a complete run
        for name in sorted(files, key=lambda n: n == "manifest.txt"):
            os.replace(os.path.join(stage, name), os.path.join(out_dir, name))
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return sorted(files)


def run(cfg: ExperimentConfig, out_dir: str | None = None) -> RunResult:
    res = execute(cfg)
    write_outputs(cfg, res, out_dir or cfg.out)
    return res
