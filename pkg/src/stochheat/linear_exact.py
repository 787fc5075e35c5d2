"""Exact Gaussian sampling of the constant-sigma solution on finite grids.

The initial condition is zero throughout. Sampling is by dense lower-triangular
factorization of the covariance matrix assembled from the closed forms in
:mod:`stochheat.kernels`; this is exact up to rounding and the (recorded)
diagonal jitter.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .kernels import (
    UNIT,
    CovarianceQuery,
    PhysicalParams,
    cov_equal_space,
    cov_equal_time,
    cov_oracle,
)
from .rng import NoiseStream

log = logging.getLogger(__name__)

JITTER_LADDER = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10)


class NonPSDError(np.linalg.LinAlgError):
    def __init__(self, min_eig: float):
        super().__init__(f"covariance not positive definite; smallest eigenvalue ~ {min_eig:.3e}")
        self.min_eig = min_eig


@dataclass(frozen=True)
class SpaceGrid:
    a1: float
    a2: float
    n: int

    def __post_init__(self):
        if not self.a1 < self.a2:
            raise ValueError(f"need a1 < a2, got [{self.a1}, {self.a2}]")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")

    @property
    def spacing(self) -> float:
        return (self.a2 - self.a1) / self.n

    @property
    def points(self) -> np.ndarray:
        return self.a1 + np.arange(self.n + 1) * (self.a2 - self.a1) / self.n


@dataclass(frozen=True)
class TimeGrid:
    t1: float
    t2: float
    n: int

    def __post_init__(self):
        if not 0 < self.t1 < self.t2:
            raise ValueError(f"need 0 < t1 < t2, got [{self.t1}, {self.t2}]")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")

    @property
    def spacing(self) -> float:
        return (self.t2 - self.t1) / self.n

    @property
    def points(self) -> np.ndarray:
        return self.t1 + np.arange(self.n + 1) * (self.t2 - self.t1) / self.n


@dataclass(frozen=True)
class SpaceTimePoints:
    """Arbitrary (t, x) points; sampled through the quadrature slow path."""

    t: tuple
    x: tuple

    def __post_init__(self):
        if len(self.t) != len(self.x) or not self.t:
            raise ValueError("t and x must be non-empty and of equal length")
        if min(self.t) <= 0:
            raise ValueError("times must be positive")

    @property
    def n(self) -> int:
        return len(self.t) - 1


Grid = Union[SpaceGrid, TimeGrid, SpaceTimePoints]


@dataclass(frozen=True, eq=False)
class GaussianFieldSampler:
    grid: Grid
    covariance: np.ndarray
    factor: np.ndarray
    jitter_applied: float
    params: PhysicalParams = UNIT
    fixed: float | None = None  # t for spatial samplers
    slow_path: bool = False

    @property
    def size(self) -> int:
        return self.covariance.shape[0]

    def factorization_residual(self) -> float:
        """max |L L^T - (C + jitter I)|; O(n^3), meant for tests."""
        C = self.covariance + self.jitter_applied * np.eye(self.size)
        return float(np.max(np.abs(self.factor @ self.factor.T - C)))


@dataclass(frozen=True, eq=False)
class SamplePath:
    grid: Grid
    values: np.ndarray
    provenance: tuple[int, int, int]  # (seed, stream id, replicate index)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points


def factorize(C: np.ndarray) -> tuple[np.ndarray, float]:
    """Cholesky factor of ``C`` with the escalating jitter ladder.

    Returns ``(L, jitter)`` with ``L @ L.T == C + jitter * I`` up to rounding.
    """
    scale = float(np.max(np.diag(C))) if C.size else 0.0
    if scale == 0.0:
        if np.any(C != 0):
            raise NonPSDError(float(scipy.linalg.eigh(C, eigvals_only=True, subset_by_index=[0, 0])[0]))
        return np.zeros_like(C), 0.0
    for rel in JITTER_LADDER:
        jitter = rel * scale
        A = C + jitter * np.eye(C.shape[0]) if jitter else C
        try:
            L = scipy.linalg.cholesky(A, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            log.debug("cholesky failed at jitter %.1e", jitter)
            continue
        return L, jitter
    min_eig = scipy.linalg.eigh(C, eigvals_only=True, subset_by_index=[0, 0])[0]
    raise NonPSDError(float(min_eig))


def spatial_covariance(grid: SpaceGrid, t: float, params: PhysicalParams = UNIT) -> np.ndarray:
    # equally spaced grid -> Toeplitz in |j - k|
    lags = np.arange(grid.n + 1) * grid.spacing
    return scipy.linalg.toeplitz(cov_equal_time(t, 0.0, lags, params))


def temporal_covariance(grid: TimeGrid, params: PhysicalParams = UNIT) -> np.ndarray:
    tp = grid.points
    lo = np.minimum.outer(tp, tp)
    hi = np.maximum.outer(tp, tp)
    C = cov_equal_space(lo, hi, params)
    return 0.5 * (C + C.T)


def build_spatial_sampler(grid: SpaceGrid, t: float, params: PhysicalParams = UNIT) -> GaussianFieldSampler:
    """Sampler for ``x -> X_t(x)`` on ``grid`` at fixed time ``t``."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    C = spatial_covariance(grid, t, params)
    L, jitter = factorize(C)
    return GaussianFieldSampler(grid, C, L, jitter, params, fixed=float(t))


def build_temporal_sampler(grid: TimeGrid, params: PhysicalParams = UNIT) -> GaussianFieldSampler:
    """Sampler for ``t -> X_t(x)`` on ``grid`` at a fixed position."""
    C = temporal_covariance(grid, params)
    L, jitter = factorize(C)
    return GaussianFieldSampler(grid, C, L, jitter, params)


def build_oracle_sampler(points: SpaceTimePoints, params: PhysicalParams = UNIT) -> GaussianFieldSampler:
    """Joint space-time sampler built entry by entry from quadrature.

    Slow path: one adaptive quadrature per matrix entry. Use only for small
    point sets where no closed form applies (``s < t`` and ``x != y``).
    """
    m = len(points.t)
    C = np.empty((m, m))
    for j in range(m):
        for k in range(j, m):
            tj, tk = points.t[j], points.t[k]
            s, t = (tj, tk) if tj <= tk else (tk, tj)
            C[j, k] = C[k, j] = cov_oracle(CovarianceQuery(s, t, points.x[j], points.x[k]), params)
    L, jitter = factorize(C)
    return GaussianFieldSampler(points, C, L, jitter, params, slow_path=True)


def sample(sampler: GaussianFieldSampler, noise: NoiseStream) -> SamplePath:
    """One path ``L z`` with ``z`` drawn from the start of ``noise``."""
    z = noise.normals(sampler.size)
    return SamplePath(sampler.grid, sampler.factor @ z, noise.provenance)


def sample_many(sampler: GaussianFieldSampler, noise: NoiseStream, replicates: Sequence[int]) -> np.ndarray:
    """Paths for several replicate indices, one row per replicate.

    Row ``i`` uses the same normals as ``sample(sampler, noise.with_replicate(replicates[i]))``;
    values agree with it up to matrix-product rounding.
    """
    replicates = list(replicates)
    if not replicates:
        return np.empty((0, sampler.size))
    Z = np.empty((sampler.size, len(replicates)))
    for i, r in enumerate(replicates):
        Z[:, i] = noise.with_replicate(r).normals(sampler.size)
    return (sampler.factor @ Z).T
