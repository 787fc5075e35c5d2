"""Estimators of the diffusion coefficient alpha from power variations.

With sigma known, the variation limits can be solved for alpha:

    temporal:  alpha_hat = 3 (T2 - T1) / (n pi) * sum_j sigma^4(X_{t_j}) / sum_j (X_{t_j} - X_{t_{j-1}})^4
    spatial:   alpha_hat = (A2 - A1) / (2 n) * sum_j sigma^2(X(x_j))  / sum_j (X(x_j) - X(x_{j-1}))^2

Both coefficient sums run over the left endpoints ``j = 0 .. n-1``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import PhysicalParams
from .linear_exact import (
    SpaceGrid,
    TimeGrid,
    build_spatial_sampler,
    build_temporal_sampler,
    sample_many,
)
from .rng import SPATIAL_STREAM, TEMPORAL_STREAM, NoiseStream
from .solver.config import ConfigError, SigmaSpec
from .variations import partition_indices, periodic_extend, power_variation

__all__ = [
    "DegenerateEstimateError",
    "EmptyReportError",
    "REFERENCE_RATE",
    "EstimatorReport",
    "RateRow",
    "alpha_hat_temporal",
    "alpha_hat_spatial",
    "alpha_hat_temporal_from_sums",
    "alpha_hat_spatial_from_sums",
    "clipped_error",
    "summarize",
    "rate_study",
    "increment_moments",
    "holder_slope",
]

# exponent suggested for E|alpha_hat - alpha| ^ 1; reported, never asserted
REFERENCE_RATE = -3 / 20


class DegenerateEstimateError(ArithmeticError):
    """The variation sum vanished, so the estimator is undefined."""


class EmptyReportError(ValueError):
    """A study was requested with no replications."""


def alpha_hat_temporal_from_sums(sigma4_sum: float, quartic_sum: float, T1: float, T2: float, n: int) -> float:
    if not quartic_sum > 0:
        raise DegenerateEstimateError("quartic variation is zero; path has no roughness")
    return 3 * (T2 - T1) / (n * math.pi) * sigma4_sum / quartic_sum


def alpha_hat_spatial_from_sums(sigma2_sum: float, quadratic_sum: float, A1: float, A2: float, n: int) -> float:
    if not quadratic_sum > 0:
        raise DegenerateEstimateError("quadratic variation is zero; path has no roughness")
    return (A2 - A1) / (2 * n) * sigma2_sum / quadratic_sum


def alpha_hat_temporal(values, times, sigma: SigmaSpec, T1: float, T2: float, n: int) -> float:
    """Temporal estimator from a trace at a fixed position."""
    values = np.asarray(values, dtype=float)
    idx = partition_indices(times, T1, T2, n)
    v = values[idx]
    s4 = math.fsum(sigma(v[:-1]) ** 4)
    return alpha_hat_temporal_from_sums(s4, power_variation(v, 4), T1, T2, n)


def alpha_hat_spatial(values, coords, sigma: SigmaSpec, A1: float, A2: float, n: int, *,
                      period: float | None = None) -> float:
    """Spatial estimator from a snapshot at a fixed time."""
    values = np.asarray(values, dtype=float)
    if period is not None:
        values, coords = periodic_extend(values, coords, period)
    idx = partition_indices(coords, A1, A2, n)
    v = values[idx]
    s2 = math.fsum(sigma(v[:-1]) ** 2)
    return alpha_hat_spatial_from_sums(s2, power_variation(v, 2), A1, A2, n)


def clipped_error(alpha_hat, alpha: float):
    """``min(|alpha_hat - alpha|, 1)``, elementwise."""
    return np.minimum(np.abs(np.asarray(alpha_hat, dtype=float) - alpha), 1.0)


@dataclass(frozen=True)
class RateRow:
    n: int
    mean_alpha_hat: float
    mean_abs_error: float
    replications: int


@dataclass
class EstimatorReport:
    method: str
    n: int
    alpha_true: float | None
    alpha_hat: float  # mean over replications at the largest n
    replications: int
    mean_abs_error: float | None
    estimates: np.ndarray = field(default_factory=lambda: np.empty(0))
    per_n: list = field(default_factory=list)  # [RateRow]
    fitted_rate: float | None = None
    reference_rate: float = REFERENCE_RATE
    config_hash: str = ""

    @property
    def error_decreasing(self) -> bool:
        errs = [r.mean_abs_error for r in sorted(self.per_n, key=lambda r: r.n)]
        return all(b < a for a, b in zip(errs, errs[1:]))

    @property
    def relative_bias(self) -> float | None:
        if not self.alpha_true:
            return None
        return abs(self.alpha_hat - self.alpha_true) / self.alpha_true

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "n", "mean_alpha_hat", "mean_abs_error", "replications", "config_hash"])
        rows = self.per_n or [RateRow(self.n, self.alpha_hat, self.mean_abs_error, self.replications)]
        for r in rows:
            err = "" if r.mean_abs_error is None else repr(float(r.mean_abs_error))
            w.writerow([self.method, r.n, repr(float(r.mean_alpha_hat)), err, r.replications, self.config_hash])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"method          {self.method}",
                 f"n               {self.n}",
                 f"replications    {self.replications}",
                 f"alpha_hat mean  {self.alpha_hat!r}"]
        if self.alpha_true is not None:
            lines.append(f"alpha true      {self.alpha_true!r}")
            lines.append(f"relative bias   {self.relative_bias!r}")
            lines.append(f"E|err| ^ 1      {self.mean_abs_error!r}")
        if len(self.per_n) > 1:
            lines.append(f"error decreasing in n  {self.error_decreasing}")
            lines.append(f"fitted rate     {self.fitted_rate!r} (reference {self.reference_rate!r})")
        return "\n".join(lines) + "\n"


def summarize(method: str, n: int, estimates, alpha_true: float | None = None) -> EstimatorReport:
    """Single-``n`` report from a vector of per-replication estimates."""
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise EmptyReportError("no replications")
    mae = float(np.mean(clipped_error(est, alpha_true))) if alpha_true is not None else None
    return EstimatorReport(method, int(n), alpha_true, float(np.mean(est)), int(est.size), mae, est,
                           per_n=[RateRow(int(n), float(np.mean(est)), mae, int(est.size))])


def _fit_slope(ns, errs) -> float | None:
    ns, errs = np.asarray(ns, float), np.asarray(errs, float)
    ok = errs > 0
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(ns[ok]), np.log(errs[ok]), 1)[0])


def rate_study(method: str, n_list: Sequence[int], replications: int, *, alpha: float = 1.0,
               sigma: float = 1.0, seed: int = 0, interval: tuple[float, float] | None = None,
               t: float = 1.0) -> EstimatorReport:
    """Mean clipped error of alpha_hat on exact linear paths for each ``n``.

    Paths are sampled once on the finest partition; coarser ones subsample
    it, so every ``n`` must divide ``max(n_list)``.
    """
    if replications <= 0:
        raise EmptyReportError("rate study needs at least one replication")
    if method not in ("temporal", "spatial"):
        raise ConfigError(f"unknown method {method!r}", "method")
    n_list = sorted(int(n) for n in n_list)
    if not n_list:
        raise EmptyReportError("empty n list")
    n_max = n_list[-1]
    if any(n_max % n for n in n_list):
        raise ConfigError("every n must divide the largest n", "n_list")
    params = PhysicalParams(alpha, sigma)
    spec = SigmaSpec.constant(sigma)
    if method == "temporal":
        lo, hi = interval or (1.0, 2.0)
        sampler = build_temporal_sampler(TimeGrid(lo, hi, n_max), params)
        noise = NoiseStream(seed, TEMPORAL_STREAM)
    else:
        lo, hi = interval or (0.0, 1.0)
        sampler = build_spatial_sampler(SpaceGrid(lo, hi, n_max), t, params)
        noise = NoiseStream(seed, SPATIAL_STREAM)
    grid = sampler.grid.points
    paths = sample_many(sampler, noise, range(replications))
    est_fn = alpha_hat_temporal if method == "temporal" else alpha_hat_spatial
    rows, last = [], None
    for n in n_list:
        last = np.array([est_fn(p, grid, spec, lo, hi, n) for p in paths])
        errs = clipped_error(last, alpha)
        rows.append(RateRow(n, float(np.mean(last)), float(np.mean(errs)), replications))
    return EstimatorReport(method, n_max, alpha, float(np.mean(last)), replications,
                           rows[-1].mean_abs_error, last, rows,
                           _fit_slope([r.n for r in rows], [r.mean_abs_error for r in rows]))


def increment_moments(paths, spacing: float, lags: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Empirical ``E|X(u + h) - X(u)|^2`` for ``h = lag * spacing``.

    Averages over all positions and all rows of ``paths``.
    """
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    h = np.asarray(lags, dtype=float) * spacing
    m = np.array([np.mean((paths[:, k:] - paths[:, :-k]) ** 2) for k in lags])
    return h, m


def holder_slope(paths, spacing: float, lags: Sequence[int]) -> float:
    """Log-log slope of the second increment moment against the lag.

    About 1 in space and 1/2 in time for the stochastic heat equation.
    """
    h, m = increment_moments(paths, spacing, lags)
    return float(np.polyfit(np.log(h), np.log(m), 1)[0])
