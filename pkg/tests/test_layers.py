import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pdfproj.errors import AsymmetricPrior, EmptyFiber, ZeroScale
from pdfproj.layers import (
    HitAndRunConfig,
    abs_log_j,
    diag_scale_log_j,
    hit_and_run,
    linear_log_j,
    sample_fiber_abs,
    sample_fiber_linear_uniform,
    sample_fiber_slice,
    slice_log_j,
)
from pdfproj.oracle import irwin_hall_log_pdf
from pdfproj.priors import PriorKind

G, U, E = PriorKind.STD_GAUSSIAN, PriorKind.UNIFORM01, PriorKind.EXPONENTIAL1
LOG_2PI = math.log(2 * math.pi)


def test_slice_log_j_examples():
    assert slice_log_j([0.5, 1.0, -1.0], 1, G) == pytest.approx(-LOG_2PI - 1.0, abs=1e-14)
    assert slice_log_j([0.5, 1.0, -1.0], 3, G) == 0.0
    assert slice_log_j([0.3, 0.4], 1, U) == 0.0


def test_abs_log_j_examples():
    assert abs_log_j(np.ones(3), G) == pytest.approx(-2.079442, abs=1e-6)
    assert abs_log_j([4.0], G) == -math.log(2)
    with pytest.raises(AsymmetricPrior):
        abs_log_j([0.2, 0.3], U)


def test_diag_scale_examples():
    assert diag_scale_log_j([7.0], [2.0]) == pytest.approx(math.log(2))
    assert diag_scale_log_j([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]) == 0.0
    assert diag_scale_log_j([1.0, 2.0], [-3.0, 0.5]) == pytest.approx(0.405465, abs=1e-6)
    with pytest.raises(ZeroScale):
        diag_scale_log_j([1.0, 2.0], [1.0, 0.0])


def test_linear_log_j_examples():
    # z = 1 is the mean of a sum of two uniforms: log J = -log p_spa(1) = +0.02305...
    val = linear_log_j([0.5, 0.5], np.ones((2, 1)), U)
    assert val == pytest.approx(0.5 * math.log(2 * math.pi * 2 / 12), abs=1e-12)
    assert val == pytest.approx(0.02305, abs=1e-5)
    assert abs(-val - irwin_hall_log_pdf(2, 1.0)) < 0.025
    # One uniform through the identity: the exact density is 1 but first-order SPA
    # gives (2 pi / 12)^(-1/2), so log J = 0.5 log(2 pi / 12) = -0.3235 (frozen value).
    assert linear_log_j([0.5], np.eye(1), U) == pytest.approx(0.5 * math.log(2 * math.pi / 12), abs=1e-12)
    # Sum of two exponentials at its mean: SPA vs exact Gamma(2, 1) log-pdf.
    lj = linear_log_j([1.0, 1.0], np.ones((2, 1)), E)
    spa = -2.0 - lj
    assert abs(spa - math.log(2 * math.exp(-2))) < 0.05


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-6, 6), min_size=2, max_size=8), st.data())
def test_slice_log_j_is_log_prior_of_dropped(x, data):
    keep = data.draw(st.integers(1, len(x)))
    expected = math.fsum(-0.5 * LOG_2PI - 0.5 * v * v for v in x[keep:])
    assert slice_log_j(x, keep, G) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=100)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20))
def test_abs_log_j_ignores_x(x):
    assert abs_log_j(x, G) == len(x) * math.log(0.5)


def test_slice_sampler():
    x = sample_fiber_slice([1.5], 2, G, 4)
    assert x[0] == 1.5 and x.shape == (2,)
    X = sample_fiber_slice(np.full((10_000, 1), 1.5), 2, G, 5)
    assert np.all(X[:, 0] == 1.5)
    assert abs(X[:, 1].mean()) < 0.05
    assert np.array_equal(sample_fiber_slice([1.5], 2, G, 4), x)


def test_abs_sampler():
    assert np.array_equal(np.abs(sample_fiber_abs([0.3, 0.7], G, 0)), [0.3, 0.7])
    X = sample_fiber_abs(np.ones((10_000, 2)), G, 1)
    assert np.all(np.abs((X > 0).mean(axis=0) - 0.5) < 0.02)
    x = sample_fiber_abs([0.0, 1.0], G, 2)
    assert x[0] == 0.0


def test_linear_segment_mean():
    W = np.ones((2, 1))
    X = hit_and_run(W, np.full((100, 1), 0.6), 100, HitAndRunConfig(burn_in=100, thin=10), np.random.default_rng(1))
    X = X.reshape(-1, 2)
    assert np.max(np.abs(X.sum(axis=1) - 0.6)) <= 1e-12
    assert np.all(X >= 0.0)
    assert np.all(np.abs(X.mean(axis=0) - 0.3) < 0.01)


def test_linear_corner_fiber_is_empty():
    with pytest.raises(EmptyFiber):
        sample_fiber_linear_uniform(np.ones((2, 1)), [2.0])
    with pytest.raises(EmptyFiber):
        sample_fiber_linear_uniform(np.ones((2, 1)), [2.5])


def conditional_cdf(t):
    # x1 | x1 + x2 + x3 = 1.5: density (0.5 + t) on [0, 0.5), (1.5 - t) on [0.5, 1], over 0.75
    t = np.asarray(t)
    lo = 0.5 * t + 0.5 * t * t
    hi = 0.375 + 1.5 * (t - 0.5) - 0.5 * (t * t - 0.25)
    return np.where(t < 0.5, lo, hi) / 0.75


def test_linear_n3_marginal_chi_square():
    W = np.ones((3, 1))
    X = hit_and_run(W, np.full((1000, 1), 1.5), 100, HitAndRunConfig(burn_in=200, thin=10), np.random.default_rng(0))
    x1 = X.reshape(-1, 3)[:, 0]
    edges = np.linspace(0, 1, 51)
    observed, _ = np.histogram(x1, edges)
    expected = np.diff(conditional_cdf(edges)) * x1.size
    assert stats.chisquare(observed, expected).pvalue > 0.01


def test_hit_and_run_determinism():
    W = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]])
    cfg = HitAndRunConfig(burn_in=50, thin=2)
    a = hit_and_run(W, [[1.0, 0.8]], 20, cfg, np.random.default_rng(3))
    b = hit_and_run(W, [[1.0, 0.8]], 20, cfg, np.random.default_rng(3))
    assert np.array_equal(a, b)
    assert np.max(np.abs(a[0] @ W - [1.0, 0.8])) <= 1e-10


def test_achievable_set_membership():
    from pdfproj.layers import achievable

    W = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    # z = (x1 + x2, x2 + x3): needs both in [0, 2] and |z1 - z2| <= 1
    Z = [[1.0, 1.0], [2.0, 0.5], [1.9, 1.0], [0.5, 1.4], [2.1, 1.0]]
    assert achievable(W, Z).tolist() == [True, False, True, True, False]
