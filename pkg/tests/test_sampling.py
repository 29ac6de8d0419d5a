import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from phavtomo.errors import ValidationError
from phavtomo.sampling import (DriftingScan, FiniteSet, JitteredScan, LinearScan, QuadratureHistogram,
                               UniformRandom, histogram, ks_distance, ks_null_scale, lag_correlation,
                               make_rng, sample_phav, sample_with_strategy, strategy_from_dict,
                               strategy_to_dict)

GOLDEN_RATE = 2 * math.pi * (math.sqrt(5) - 1) / 2
N = 100_000


def _ks(a, b, bw=0.1):
    lo = min(a.samples.min(), b.samples.min())
    hi = max(a.samples.max(), b.samples.max())
    return ks_distance(histogram(a, bw, range=(lo, hi)), histogram(b, bw, range=(lo, hi)))


def _ref(alpha, seed=1000):
    return sample_phav(alpha, N, seed)


# -- sample_phav --------------------------------------------------------------

def test_vacuum_variance():
    n = 1_000_000
    x = sample_phav(0.0, n, 1).samples
    assert x.var() == pytest.approx(0.5, abs=3 * 0.5 * math.sqrt(2 / n))


def test_bright_variance():
    x = sample_phav(math.sqrt(13.8), 1_000_000, 2).samples
    assert x.var() == pytest.approx(14.3, abs=0.15)


def test_zero_mean():
    n = 1_000_000
    x = sample_phav(math.sqrt(2.9), n, 3).samples
    assert abs(x.mean()) <= 3 * math.sqrt(3.4 / n)


def test_moment_laws_batched():
    alpha = 1.7
    x = sample_phav(alpha, 1_000_000, 4).samples
    batches = x.reshape(100, -1)
    a2 = alpha ** 2
    for power, expected in [(1, 0.0), (2, a2 + 0.5), (4, 1.5 * a2 ** 2 + 3 * a2 + 0.75)]:
        per_batch = (batches ** power).mean(axis=1)
        se = per_batch.std(ddof=1) / math.sqrt(per_batch.size)
        assert abs(per_batch.mean() - expected) <= 4 * se


def test_reproducible():
    a = sample_phav(2.0, 1000, 11).samples
    b = sample_phav(2.0, 1000, 11).samples
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_phav(2.0, 1000, 12).samples)


def test_streams_are_distinct():
    a = make_rng(5, 0).random(8)
    b = make_rng(5, 1).random(8)
    c = make_rng(5).random(8)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.array_equal(a, make_rng(5, 0).random(8))


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_sample_count_errors(n):
    with pytest.raises(ValueError):
        sample_phav(1.0, n, 0)


def test_negative_amplitude_rejected():
    with pytest.raises(ValueError):
        sample_phav(-1.0, 10, 0)


# -- strategies ------------------------------------------------------------------

def test_strategy_invariants():
    with pytest.raises(ValueError):
        FiniteSet(0)
    with pytest.raises(ValueError):
        JitteredScan(0.1, jitter_sigma=-1.0)
    with pytest.raises(ValueError):
        JitteredScan(0.1, jump_prob=1.5)


def test_strategy_phase_rules():
    rng = make_rng(0)
    np.testing.assert_allclose(FiniteSet(4).phases(8, rng), np.tile([0, np.pi / 2, np.pi, 1.5 * np.pi], 2))
    np.testing.assert_allclose(LinearScan(0.3).phases(5, rng), 0.3 * np.arange(5))
    i = np.arange(5.0)
    np.testing.assert_allclose(DriftingScan(0.3, 0.01).phases(5, rng), 0.3 * i + 0.01 * i * i)
    assert np.array_equal(JitteredScan(0.3).phases(5, rng), LinearScan(0.3).phases(5, rng))


def test_strategy_dict_round_trip():
    for s in (UniformRandom(), FiniteSet(3), LinearScan(0.2), DriftingScan(0.1, 1e-7),
              JitteredScan(0.1, 0.05, 1e-3, math.pi / 2)):
        assert strategy_from_dict(strategy_to_dict(s)) == s
    with pytest.raises(ValueError):
        strategy_from_dict({"variant": "spiral"})


def test_finite_single_phase_vacuum_is_gaussian():
    x = sample_with_strategy(0.0, N, FiniteSet(1), 3).samples
    assert stats.kstest(x, "norm", args=(0, math.sqrt(0.5))).pvalue > 1e-3


def test_linear_golden_scan_matches_uniform():
    scan = sample_with_strategy(2.0, N, LinearScan(GOLDEN_RATE), 5)
    assert _ks(scan, _ref(2.0)) <= 0.01


def test_finite_four_phases_detected():
    assert _ks(sample_with_strategy(2.0, N, FiniteSet(4), 5), _ref(2.0)) > 0.03


def test_finite_two_phases_detected():
    assert _ks(sample_with_strategy(2.0, N, FiniteSet(2), 5), _ref(2.0)) > 0.05


def test_two_uniform_datasets_agree():
    assert _ks(sample_phav(2.0, N, 21), sample_phav(2.0, N, 22)) <= 0.01


def test_ks_self_zero_and_disjoint():
    h = histogram(sample_phav(1.0, 1000, 0), 0.1)
    assert ks_distance(h, h) == 0.0
    far = histogram(np.array([100.0, 101.0]), 0.1)
    with pytest.raises(ValidationError):
        ks_distance(h, far)


def test_ks_null_scale():
    assert ks_null_scale(N) == pytest.approx(1.63 * math.sqrt(2 / N))


# -- artifacts at the bright-probe setting ---------------------------------------------

BRIGHT = math.sqrt(13.8)


@pytest.mark.parametrize("k", range(1, 9))
def test_finite_sets_up_to_eight_detected(k):
    assert _ks(sample_with_strategy(BRIGHT, N, FiniteSet(k), 5), _ref(BRIGHT)) > 3 * ks_null_scale(N)


def test_drifting_scan_detected():
    # one slow sweep whose speed changes by ~4% over the train
    drift = DriftingScan(2 * math.pi / N, 2e-10)
    assert _ks(sample_with_strategy(BRIGHT, N, drift, 5), _ref(BRIGHT)) > 3 * ks_null_scale(N)


def test_drifting_scan_reversal_detected_at_1e_7():
    # rate chosen so the scan turns around mid-train and dwells near one phase
    q = 1e-7
    drift = DriftingScan(-q * (N - 1), q)
    assert _ks(sample_with_strategy(BRIGHT, N, drift, 5), _ref(BRIGHT)) > 3 * ks_null_scale(N)


@pytest.mark.xfail(strict=True, reason="a forward drift of 1e-7 rad/pulse^2 sweeps ~160 turns over 1e5 "
                   "pulses; the phase histogram stays near uniform (KS ~0.014 vs threshold ~0.022)")
def test_drifting_scan_forward_1e_7_detected():
    drift = DriftingScan(0.0, 1e-7)
    assert _ks(sample_with_strategy(BRIGHT, N, drift, 5), _ref(BRIGHT)) > 3 * ks_null_scale(N)


def test_jittered_scan_detected():
    jit = JitteredScan(2 * math.pi / N, 0.05, 1e-3, math.pi / 2)
    assert _ks(sample_with_strategy(BRIGHT, N, jit, 5), _ref(BRIGHT)) > 3 * ks_null_scale(N)


# -- lag correlation ---------------------------------------------------------------------

def test_lag_zero_is_one():
    assert lag_correlation(sample_phav(1.0, 100, 0), 3)[0] == 1.0


def test_uniform_lags_uncorrelated():
    r = lag_correlation(sample_phav(2.0, N, 9), 10)
    assert np.all(np.abs(r[1:]) <= 3 / math.sqrt(N))


def test_slow_scan_correlated():
    r = lag_correlation(sample_with_strategy(BRIGHT, N, LinearScan(0.01), 9), 1)
    assert r[1] > 0.9


@pytest.mark.xfail(strict=True, reason="at alpha = 2 the lag-1 coefficient is at most "
                   "alpha^2 / (alpha^2 + 1/2) * cos(0.01) ~ 0.889; vacuum noise caps it below 0.9")
def test_slow_scan_correlated_at_alpha_2():
    r = lag_correlation(sample_with_strategy(2.0, N, LinearScan(0.01), 9), 1)
    assert r[1] > 0.9


def test_slow_scan_lag_one_matches_analytic_value():
    # cov(x_i, x_{i+1}) = alpha^2 cos(rate) for a slow scan; var = alpha^2 + 1/2
    r = lag_correlation(sample_with_strategy(2.0, N, LinearScan(0.01), 9), 1)
    assert r[1] == pytest.approx(4.0 / 4.5 * math.cos(0.01), abs=0.01)


def test_lag_errors():
    with pytest.raises(ValidationError):
        lag_correlation(np.ones(50), 3)
    with pytest.raises(ValueError):
        lag_correlation(np.arange(4.0), 3)


# -- histograms ---------------------------------------------------------------------------

def test_vacuum_histogram_matches_gaussian():
    h = histogram(sample_phav(0.0, 1_000_000, 8), 0.1)
    ref = stats.norm.pdf(h.centers, scale=math.sqrt(0.5))
    assert np.max(np.abs(h.frequencies - ref)) <= 0.01


def test_bright_histogram_is_bimodal():
    h = histogram(sample_phav(BRIGHT, 1_000_000, 8), 0.1)
    left = h.centers < 0
    peak_l = h.centers[left][np.argmax(h.frequencies[left])]
    peak_r = h.centers[~left][np.argmax(h.frequencies[~left])]
    # exact density: arcsine law of sqrt(2) alpha cos(phi) convolved with N(0, 1/2)
    phi = (np.arange(4096) + 0.5) * 2 * math.pi / 4096
    grid = np.arange(0.0, 8.0, 0.005)
    exact = stats.norm.pdf(grid[:, None] - math.sqrt(2) * BRIGHT * np.cos(phi)[None, :],
                           scale=math.sqrt(0.5)).mean(axis=1)
    mode = grid[np.argmax(exact)]
    assert abs(peak_r - mode) <= 0.1 and abs(peak_l + mode) <= 0.1
    # vacuum noise pulls the horns inward by less than one vacuum standard deviation
    turning = math.sqrt(2 * 13.8)
    assert abs(peak_l + turning) < math.sqrt(0.5) and abs(peak_r - turning) < math.sqrt(0.5)
    assert h.frequencies[np.argmin(np.abs(h.centers))] < 0.5 * h.frequencies.max()


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 500), bw=st.floats(0.01, 1.0),
       alpha=st.floats(0.0, 5.0))
def test_histogram_normalized_and_aligned(seed, n, bw, alpha):
    h = histogram(sample_phav(alpha, n, seed), bw)
    assert float(h.weights.sum()) == pytest.approx(1.0, abs=1e-9)
    k = h.bin_edges / bw
    np.testing.assert_allclose(k, np.round(k), atol=1e-6)
    x = sample_phav(alpha, n, seed).samples
    assert h.bin_edges[0] <= x.min() - 3 * bw + 1e-9
    assert h.bin_edges[-1] >= x.max() + 3 * bw - 1e-9


def test_histogram_errors():
    with pytest.raises(ValueError):
        histogram(np.array([]), 0.1)
    with pytest.raises(ValueError):
        histogram(np.array([1.0]), 0.0)
    with pytest.raises(ValidationError):
        QuadratureHistogram(np.array([0.0, 1.0, 0.5]), np.array([0.5, 0.5]))
    with pytest.raises(ValidationError):
        QuadratureHistogram(np.array([0.0, 1.0]), np.array([2.0]))
