"""Power variations along equally spaced partitions and their limits.

For the stochastic heat equation the quadratic variation in space and the
quartic variation in time converge to path integrals of the noise coefficient:

    sum_j (X_t(x_j) - X_t(x_{j-1}))^2  ->  1/(2 alpha) int sigma^2(X_t(x)) dx
    sum_j (X_{t_j}(x) - X_{t_{j-1}}(x))^4  ->  3/(pi alpha) int sigma^4(X_t(x)) dt

Targets are evaluated on the realized path (the limits are random), with a
midpoint rule on the full recording grid. Partitions are obtained by integer
subsampling of that grid; values are never interpolated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import DomainError
from .linear_exact import GaussianFieldSampler, sample_many
from .rng import NoiseStream
from .solver.config import ConfigError, SigmaSpec

__all__ = [
    "CSV_HEADER",
    "VariationReport",
    "ScanRow",
    "power_variation",
    "partition_indices",
    "periodic_extend",
    "midpoint_integral",
    "spatial_quadratic_report",
    "temporal_quartic_report",
    "variation_scaling_scan",
    "variance_decreasing",
    "LinearPathSource",
]

CSV_HEADER = ("axis", "p", "n", "delta", "empirical", "target", "rel_error", "seed")

# commensurability slack, relative to one grid spacing
_SNAP_TOL = 1e-9


def power_variation(values, p: int = 2) -> float:
    """``sum_j (v_j - v_{j-1})^p`` for even ``p``, with compensated summation."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < 2:
        raise DomainError("power variation needs at least two values")
    if int(p) != p or p <= 0 or p % 2:
        raise DomainError(f"p must be a positive even integer, got {p!r}")
    # abs first: the power kernel may round (-d)^p and d^p differently, which breaks reversal symmetry
    return math.fsum(np.abs(np.diff(v)) ** int(p))


def partition_indices(coords, lo: float, hi: float, n: int) -> np.ndarray:
    """Indices into the uniform grid ``coords`` of the ``n + 1`` partition points of ``[lo, hi]``.

    Raises ConfigError unless every partition point is a grid point.
    """
    coords = np.asarray(coords, dtype=float)
    if int(n) != n or n < 1:
        raise ConfigError("partition count must be a positive integer", "n")
    if coords.size < 2:
        raise ConfigError("grid needs at least two points", "grid")
    h = (coords[-1] - coords[0]) / (coords.size - 1)
    if not lo < hi:
        raise ConfigError(f"empty interval [{lo}, {hi}]", "interval")
    stride = (hi - lo) / n / h
    first = (lo - coords[0]) / h
    k, j0 = round(stride), round(first)
    if k < 1 or abs(stride - k) > _SNAP_TOL * max(1.0, stride) or abs(first - j0) > _SNAP_TOL * max(1.0, abs(first)):
        raise ConfigError(
            f"partition of [{lo}, {hi}] into {n} is not commensurate with grid spacing {h:.6g}", "window", h
        )
    idx = j0 + k * np.arange(n + 1)
    if idx[0] < 0 or idx[-1] >= coords.size:
        raise ConfigError(f"interval [{lo}, {hi}] leaves the recorded grid", "interval")
    return idx


def periodic_extend(values, coords, period: float):
    """Append the wrapped first node so a periodic field covers its closed period."""
    values = np.asarray(values, dtype=float)
    coords = np.asarray(coords, dtype=float)
    return np.append(values, values[0]), np.append(coords, coords[0] + period)


def midpoint_integral(fvals, coords, lo_idx: int, hi_idx: int) -> float:
    """Midpoint rule for ``int f(X)`` over grid cells ``lo_idx .. hi_idx``.

    ``fvals`` must already be evaluated at the cell midpoints, i.e. have one
    entry per cell ``[coords[i], coords[i + 1]]``.
    """
    h = np.diff(np.asarray(coords, dtype=float)[lo_idx:hi_idx + 1])
    return math.fsum(h * np.asarray(fvals)[lo_idx:hi_idx])


def _cell_midpoints(values):
    # the path is only known on nodes: use the mean of the two endpoint values
    return 0.5 * (values[:-1] + values[1:])


@dataclass(frozen=True)
class VariationReport:
    axis: str  # "space" or "time"
    p: int
    n: int
    window: float
    empirical: float
    target: float
    interval: tuple[float, float]
    fixed: float | None = None  # t for space reports, x for time reports
    seed: int | None = None

    @property
    def relative_error(self) -> float:
        if self.target == 0:
            return 0.0 if self.empirical == 0 else math.inf
        return abs(self.empirical - self.target) / abs(self.target)

    def csv_row(self) -> tuple:
        seed = "" if self.seed is None else self.seed
        return (self.axis, self.p, self.n, self.window, self.empirical, self.target,
                self.relative_error, seed)


def _alpha_ok(alpha):
    if not alpha > 0:
        raise ConfigError("alpha must be positive", "alpha")


def spatial_quadratic_report(values, coords, sigma: SigmaSpec, alpha: float, window: float,
                             interval: tuple[float, float], *, period: float | None = None,
                             t: float | None = None, seed: int | None = None) -> VariationReport:
    """Quadratic variation of a snapshot against ``1/(2 alpha) int sigma^2(X) dx``.

    ``period`` marks a periodic snapshot stored without its duplicate end node.
    """
    _alpha_ok(alpha)
    values = np.asarray(values, dtype=float)
    coords = np.asarray(coords, dtype=float)
    if period is not None:
        values, coords = periodic_extend(values, coords, period)
    lo, hi = interval
    n_real = (hi - lo) / window
    n = round(n_real)
    if n < 1 or abs(n_real - n) > _SNAP_TOL * max(1.0, n_real):
        raise ConfigError(f"window {window} does not divide [{lo}, {hi}]", "window")
    idx = partition_indices(coords, lo, hi, n)
    emp = power_variation(values[idx], 2)
    c = sigma.constant_value
    if c is not None:
        target = c * c * (hi - lo) / (2 * alpha)
    else:
        s2 = sigma(_cell_midpoints(values)) ** 2
        target = midpoint_integral(s2, coords, idx[0], idx[-1]) / (2 * alpha)
    return VariationReport("space", 2, n, window, emp, target, (lo, hi), t, seed)


def temporal_quartic_report(values, times, sigma: SigmaSpec, alpha: float,
                            interval: tuple[float, float], n: int, *,
                            x: float | None = None, seed: int | None = None) -> VariationReport:
    """Quartic variation of a trace against ``3/(pi alpha) int sigma^4(X) dt``."""
    _alpha_ok(alpha)
    lo, hi = interval
    if not lo > 0:
        raise ConfigError("time interval must start after 0", "interval")
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    idx = partition_indices(times, lo, hi, n)
    emp = power_variation(values[idx], 4)
    c = sigma.constant_value
    if c is not None:
        target = 3 * c**4 * (hi - lo) / (math.pi * alpha)
    else:
        s4 = sigma(_cell_midpoints(values)) ** 4
        target = 3 * midpoint_integral(s4, times, idx[0], idx[-1]) / (math.pi * alpha)
    return VariationReport("time", 4, n, (hi - lo) / n, emp, target, (lo, hi), x, seed)


@dataclass(frozen=True)
class ScanRow:
    n: int
    mean: float
    variance: float
    replications: int


def variation_scaling_scan(source: Callable[[int, Sequence[int]], np.ndarray], p: int,
                           n_values: Sequence[int], replicates: Sequence[int]) -> list[ScanRow]:
    """Mean and sample variance of the ``p``-variation for each partition count.

    ``source(n, replicates)`` returns one path per row with ``n + 1`` columns;
    it must be reproducible per replicate index.
    """
    replicates = sorted(replicates)
    rows = []
    for n in n_values:
        paths = np.atleast_2d(source(n, replicates))
        sums = np.array([power_variation(row, p) for row in paths])
        var = float(np.var(sums, ddof=1)) if len(sums) > 1 else 0.0
        rows.append(ScanRow(int(n), float(np.mean(sums)), var, len(sums)))
    return rows


def variance_decreasing(rows: Sequence[ScanRow]) -> bool:
    """Whether the variance column is strictly decreasing in ``n``."""
    rows = sorted(rows, key=lambda r: r.n)
    return all(b.variance < a.variance for a, b in zip(rows, rows[1:]))


@dataclass
class LinearPathSource:
    """Exact linear paths on the sampler's grid, coarsened by integer subsampling.

    Every partition count must divide the sampler's interval count, so all
    partitions of one replicate come from the same fine path.
    """

    sampler: GaussianFieldSampler
    noise: NoiseStream
    _cache: dict = field(default_factory=dict, repr=False)

    def fine_paths(self, replicates: Sequence[int]) -> np.ndarray:
        key = tuple(replicates)
        if key not in self._cache:
            self._cache.clear()
            self._cache[key] = sample_many(self.sampler, self.noise, key)
        return self._cache[key]

    def __call__(self, n: int, replicates: Sequence[int]) -> np.ndarray:
        fine = self.sampler.size - 1
        if fine % n:
            raise ConfigError(f"n={n} does not divide the sampler's {fine} intervals", "n")
        return self.fine_paths(replicates)[:, :: fine // n]
