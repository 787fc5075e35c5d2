import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stochheat.kernels import DomainError
from stochheat.linear_exact import SpaceGrid, TimeGrid, build_spatial_sampler, build_temporal_sampler
from stochheat.rng import NoiseStream
from stochheat.solver import ConfigError, SigmaSpec
from stochheat.variations import (
    CSV_HEADER,
    LinearPathSource,
    midpoint_integral,
    partition_indices,
    periodic_extend,
    power_variation,
    spatial_quadratic_report,
    temporal_quartic_report,
    variance_decreasing,
    variation_scaling_scan,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
paths = arrays(np.float64, st.integers(2, 200), elements=finite)


def test_constant_sequence():
    assert power_variation(np.full(10, 3.7), 2) == 0.0
    assert power_variation(np.full(10, 3.7), 4) == 0.0


@pytest.mark.parametrize("n", [1, 7, 1000])
def test_linear_ramp(n):
    v = np.arange(n + 1) / n
    assert power_variation(v, 2) == pytest.approx(1 / n, rel=1e-12)


def test_brownian_quadratic_variation():
    n = 2**16
    inc = NoiseStream(31, 7).normals(n) / math.sqrt(n)
    w = np.concatenate([[0.0], np.cumsum(inc)])
    # sum of n squared N(0, 1/n): mean 1, standard deviation sqrt(2/n)
    assert abs(power_variation(w, 2) - 1) < 3 * math.sqrt(2 / n)


def test_domain_errors():
    with pytest.raises(DomainError):
        power_variation([1.0], 2)
    with pytest.raises(DomainError):
        power_variation([1.0, 2.0], 3)
    with pytest.raises(DomainError):
        power_variation([1.0, 2.0], 0)


@settings(max_examples=100)
@given(paths, finite, st.sampled_from([2, 4]))
def test_shift_invariance(v, c, p):
    a = power_variation(v, p)
    b = power_variation(v + c, p)
    # the shift perturbs each increment by at most two roundings at the shifted magnitude
    eps = 2.3e-16 * (np.max(np.abs(v)) + abs(c))
    bound = p * math.fsum((np.abs(np.diff(v)) + eps) ** (p - 1)) * eps
    assert abs(a - b) <= bound + 1e-12 * a


@settings(max_examples=100)
@given(paths, st.sampled_from([2, 4]))
def test_reversal_invariance(v, p):
    assert power_variation(v[::-1], p) == power_variation(v, p)


@settings(max_examples=100)
@given(paths, st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3), st.sampled_from([2, 4]))
def test_homogeneity(v, c, p):
    a = power_variation(c * v, p)
    b = c**p * power_variation(v, p)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


def test_smooth_annihilation():
    ns = np.array([64, 128, 256, 512, 1024, 2048])
    f = lambda x: np.sin(3 * x) + x**2
    qv = np.array([power_variation(f(np.linspace(0, 1, n + 1)), 2) for n in ns])
    scaled = ns * qv
    assert np.ptp(scaled) < 0.01 * scaled.mean()  # n * QV is bounded (converges to int f'^2)
    slope = np.polyfit(np.log(ns), np.log(qv), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.05)


# --- partitions ---------------------------------------------------------------------

def test_partition_indices():
    coords = np.arange(65) / 64
    idx = partition_indices(coords, 0.25, 0.75, 8)
    assert list(idx) == list(range(16, 49, 4))


def test_partition_incommensurate():
    coords = np.arange(65) / 64
    with pytest.raises(ConfigError):
        partition_indices(coords, 0.0, 1.0, 48)
    with pytest.raises(ConfigError):
        partition_indices(coords, 0.01, 0.51, 8)
    with pytest.raises(ConfigError):
        partition_indices(coords, 0.5, 1.5, 8)


def test_periodic_extend():
    v, x = periodic_extend([1.0, 2.0, 3.0], [0.0, 1 / 3, 2 / 3], 1.0)
    assert list(v) == [1.0, 2.0, 3.0, 1.0] and x[-1] == 1.0


def test_midpoint_integral():
    coords = np.linspace(0, 2, 9)
    mids = 0.5 * (coords[:-1] + coords[1:])
    assert midpoint_integral(mids, coords, 0, 8) == pytest.approx(2.0, rel=1e-14)
    assert midpoint_integral(np.ones(8), coords, 2, 6) == pytest.approx(1.0, rel=1e-14)


# --- reports ------------------------------------------------------------------------

def test_space_target_constant():
    coords = np.arange(4097) / 4096
    rep = spatial_quadratic_report(np.zeros(4097), coords, SigmaSpec.constant(1.0), 1.0, 1 / 4096, (0.0, 1.0))
    assert rep.target == 0.5
    assert rep.n * rep.window == pytest.approx(1.0, rel=1e-15)


def test_time_target_constant():
    times = 1 + np.arange(4097) / 4096
    rep = temporal_quartic_report(np.zeros(4097), times, SigmaSpec.constant(1.0), 1.0, (1.0, 2.0), 4096)
    assert rep.target == pytest.approx(3 / math.pi, rel=1e-15)
    assert rep.target == pytest.approx(0.9549297, abs=1e-7)


@pytest.mark.parametrize("sigma,alpha", [(0.5, 2.0), (3.0, 0.7)])
def test_constant_targets_scale(sigma, alpha):
    coords = np.arange(65) / 64
    rs = spatial_quadratic_report(np.zeros(65), coords, SigmaSpec.constant(sigma), alpha, 1 / 16, (0.25, 0.75))
    assert rs.target == pytest.approx(sigma**2 / (2 * alpha) * 0.5, rel=1e-15)
    rt = temporal_quartic_report(np.zeros(65), 1 + coords, SigmaSpec.constant(sigma), alpha, (1.25, 1.75), 8)
    assert rt.target == pytest.approx(3 * sigma**4 / (math.pi * alpha) * 0.5, rel=1e-15)


def test_zero_sigma_smooth_path():
    x = np.arange(257) / 256
    smooth = np.exp(-x)
    rep = spatial_quadratic_report(smooth, x, SigmaSpec.constant(0.0), 1.0, 1 / 256, (0.0, 1.0))
    assert rep.target == 0.0
    assert rep.empirical < 1e-2  # O(1/n) for a smooth path
    rt = temporal_quartic_report(smooth, 1 + x, SigmaSpec.constant(0.0), 1.0, (1.0, 2.0), 256)
    assert rt.target == 0.0 and rt.empirical < 1e-7  # O(1/n^3)


def test_zero_path_zero_everything():
    x = np.arange(65) / 64
    rep = spatial_quadratic_report(np.zeros(65), x, SigmaSpec.constant(0.0), 1.0, 1 / 64, (0.0, 1.0))
    assert rep.empirical == 0.0 and rep.target == 0.0 and rep.relative_error == 0.0


def test_nonconstant_target_uses_path():
    x = np.arange(129) / 128
    path = 0.3 + 0.2 * np.sin(2 * np.pi * x)
    sig = SigmaSpec.affine(1.0, 2.0)
    rep = spatial_quadratic_report(path, x, sig, 1.5, 1 / 32, (0.0, 1.0))
    mids = 0.5 * (path[:-1] + path[1:])
    expected = np.sum((1 + 2 * mids) ** 2) / 128 / 3.0
    assert rep.target == pytest.approx(expected, rel=1e-13)
    exact = (1.6**2 + 0.5 * 0.4**2) / 3.0  # int (1.6 + 0.4 sin)^2 over a period
    assert rep.target == pytest.approx(exact, rel=1e-3)


def test_periodic_snapshot():
    x = np.arange(64) / 64
    rep = spatial_quadratic_report(np.sin(2 * np.pi * x), x, SigmaSpec.constant(1.0), 1.0, 1 / 16, (0.0, 1.0),
                                   period=1.0)
    assert rep.n == 16
    assert rep.empirical == pytest.approx(power_variation(np.sin(2 * np.pi * np.arange(17) / 16)), rel=1e-14)


def test_report_errors():
    x = np.arange(65) / 64
    with pytest.raises(ConfigError):
        spatial_quadratic_report(np.zeros(65), x, SigmaSpec.constant(1.0), 1.0, 0.3, (0.0, 1.0))
    with pytest.raises(ConfigError):
        spatial_quadratic_report(np.zeros(65), x, SigmaSpec.constant(1.0), 1.0, 1 / 96 * 2, (0.0, 1.0))
    with pytest.raises(ConfigError):
        temporal_quartic_report(np.zeros(65), x, SigmaSpec.constant(1.0), 1.0, (0.0, 1.0), 8)
    with pytest.raises(ConfigError):
        temporal_quartic_report(np.zeros(65), 1 + x, SigmaSpec.constant(1.0), 1.0, (1.0, 2.0), 96)
    with pytest.raises(ConfigError):
        spatial_quadratic_report(np.zeros(65), x, SigmaSpec.constant(1.0), 0.0, 1 / 8, (0.0, 1.0))


def test_csv_row():
    x = np.arange(65) / 64
    rep = spatial_quadratic_report(x, x, SigmaSpec.constant(1.0), 1.0, 1 / 8, (0.0, 1.0), seed=17, t=0.25)
    row = rep.csv_row()
    assert len(row) == len(CSV_HEADER)
    assert dict(zip(CSV_HEADER, row)) == {"axis": "space", "p": 2, "n": 8, "delta": 0.125,
                                          "empirical": rep.empirical, "target": 0.5,
                                          "rel_error": rep.relative_error, "seed": 17}
    assert rep.fixed == 0.25


# --- linear-case scans -----------------------------------------------------------------

def test_exact_spatial_report_near_half():
    s = build_spatial_sampler(SpaceGrid(0.0, 1.0, 4096), 1.0)
    src = LinearPathSource(s, NoiseStream(41, 1))
    path = src.fine_paths([0])[0]
    rep = spatial_quadratic_report(path, s.grid.points, SigmaSpec.constant(1.0), 1.0, 1 / 4096, (0.0, 1.0))
    # one path: standard deviation of the sum is about sqrt(2 / 4096) * 0.5
    assert abs(rep.empirical - 0.5) < 4 * 0.5 * math.sqrt(2 / 4096)


def test_exact_temporal_report_near_three_over_pi():
    s = build_temporal_sampler(TimeGrid(1.0, 2.0, 4096))
    path = LinearPathSource(s, NoiseStream(42, 2)).fine_paths([0])[0]
    rep = temporal_quartic_report(path, s.grid.points, SigmaSpec.constant(1.0), 1.0, (1.0, 2.0), 4096)
    # fourth powers of Gaussians: relative standard deviation sqrt(96 / 9 / n)
    assert rep.relative_error < 4 * math.sqrt(96 / 9 / 4096)


def test_scan_variance_decreases():
    s = build_spatial_sampler(SpaceGrid(0.0, 1.0, 4096), 1.0)
    rows = variation_scaling_scan(LinearPathSource(s, NoiseStream(43, 1)), 2, [256, 1024, 4096], range(200))
    assert variance_decreasing(rows)
    assert [r.n for r in rows] == [256, 1024, 4096]
    assert all(r.replications == 200 for r in rows)
    assert rows[-1].mean == pytest.approx(0.5, rel=0.01)


def test_scan_temporal_means_approach_limit():
    s = build_temporal_sampler(TimeGrid(1.0, 2.0, 4096))
    rows = variation_scaling_scan(LinearPathSource(s, NoiseStream(44, 2)), 4, [256, 1024, 4096], range(200))
    assert variance_decreasing(rows)
    errs = [abs(r.mean - 3 / math.pi) for r in rows]
    assert errs[-1] < 0.02


def test_scan_deterministic_path():
    det = lambda n, reps: np.tile(np.sin(np.linspace(0, 1, n + 1)), (len(reps), 1))
    rows = variation_scaling_scan(det, 2, [4, 8], range(5))
    assert all(r.variance == 0.0 for r in rows)


def test_source_requires_divisor():
    s = build_spatial_sampler(SpaceGrid(0.0, 1.0, 64), 1.0)
    with pytest.raises(ConfigError):
        LinearPathSource(s, NoiseStream(1))(48, [0])


def test_source_reproducible():
    s = build_spatial_sampler(SpaceGrid(0.0, 1.0, 64), 1.0)
    a = LinearPathSource(s, NoiseStream(1, 1))(16, [3, 4])
    b = LinearPathSource(s, NoiseStream(1, 1))(16, [3, 4])
    assert np.array_equal(a, b) and a.shape == (2, 17)
