import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, stats

from pdfproj.errors import SaddleDomainError
from pdfproj.oracle import irwin_hall_log_pdf
from pdfproj.priors import PriorKind, cgf
from pdfproj.spa import multivariate_cgf, solve_saddle, spa_log_density, spa_log_density_batch

G, U, E = PriorKind.STD_GAUSSIAN, PriorKind.UNIFORM01, PriorKind.EXPONENTIAL1


def rel_err(a, b):
    return abs(math.expm1(a - b))


def test_cgf_at_zero_gives_cumulants():
    W = np.array([[1.0, 0.5], [2.0, -1.0], [0.3, 0.3]])
    value, grad, hess = multivariate_cgf(W, [0.0, 0.0], U)
    assert value == 0.0
    assert np.allclose(grad, 0.5 * W.T @ np.ones(3), atol=1e-15)
    assert np.allclose(hess, W.T @ W / 12, atol=1e-15)


def test_cgf_value_is_sum_of_scalars():
    assert multivariate_cgf(np.ones((2, 1)), [10.0], U)[0] == pytest.approx(2 * cgf(U, 10.0).value, rel=1e-15)
    assert multivariate_cgf(np.ones((2, 1)), [10.0], U)[0] == pytest.approx(15.394739, abs=1e-6)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    W = rng.random((4, 2)) + 0.1
    h = 1e-6
    for _ in range(50):
        lam = rng.uniform(-5, 5, 2)
        _, grad, _ = multivariate_cgf(W, lam, U)
        fd = [(multivariate_cgf(W, lam + h * e, U)[0] - multivariate_cgf(W, lam - h * e, U)[0]) / (2 * h) for e in np.eye(2)]
        assert np.allclose(fd, grad, rtol=1e-6, atol=1e-8)


def test_saddle_examples():
    W = np.ones((2, 1))
    assert solve_saddle(W, [1.0], U).lambda_star[0] == 0.0
    res = solve_saddle(W, [1.5], U)
    ref = optimize.brentq(lambda t: 2 * cgf(U, t).d1 - 1.5, 0.0, 50.0, xtol=1e-14)
    assert res.grad_residual <= 1e-10
    assert res.lambda_star[0] == pytest.approx(ref, abs=1e-9)
    assert res.lambda_star[0] == pytest.approx(3.594, abs=1e-3)
    with pytest.raises(SaddleDomainError):
        solve_saddle(W, [2.1], U)
    with pytest.raises(SaddleDomainError):
        solve_saddle(W, [2.0], U)
    with pytest.raises(SaddleDomainError):
        solve_saddle(W, [-0.1], U)


def test_spa_n2_mode():
    val = spa_log_density(np.ones((2, 1)), [1.0], U)
    assert val == pytest.approx(0.5 * math.log(6 / (2 * math.pi)), abs=1e-12)
    assert rel_err(val, irwin_hall_log_pdf(2, 1.0)) == pytest.approx(0.0228, abs=1e-4)


def test_spa_n10_mode_error_frozen():
    # Measured first-order SPA error at the Irwin-Hall mode for n = 10.
    err = rel_err(spa_log_density(np.ones((10, 1)), [5.0], U), irwin_hall_log_pdf(10, 5.0))
    assert err == pytest.approx(0.015338, abs=1e-5)


def test_exponential_sum_close_to_gamma():
    for n in (2, 5, 20):
        for z in (0.5 * n, n, 2.0 * n):
            err = rel_err(spa_log_density(np.ones((n, 1)), [z], E), stats.gamma(n).logpdf(z))
            # for sums of exponentials the relative SPA error is constant in z
            assert err < 0.05


def test_gaussian_exactness_rectangular():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(2, 8))
        m = int(rng.integers(1, n + 1))
        W = rng.standard_normal((n, m))
        z = W.T @ rng.standard_normal(n)
        exact = stats.multivariate_normal(np.zeros(m), W.T @ W).logpdf(z)
        assert spa_log_density(W, z, G) == pytest.approx(exact, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.floats(0.02, 0.98))
def test_uniform_symmetry(n, frac):
    W = np.ones((n, 1))
    z = frac * n
    assert spa_log_density(W, [z], U) == pytest.approx(spa_log_density(W, [n - z], U), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_batch_agrees_with_scalar(seed):
    rng = np.random.default_rng(seed)
    W = rng.random((5, 2)) + 0.1
    Z = rng.random((8, 5)) @ W
    batch = spa_log_density_batch(W, Z, U)
    single = [spa_log_density(W, z, U) for z in Z]
    assert np.allclose(batch, single, rtol=0, atol=1e-9)


def test_batch_error_index():
    with pytest.raises(SaddleDomainError) as info:
        spa_log_density_batch(np.ones((2, 1)), [[1.0], [0.5], [2.5]], U)
    assert info.value.index == 2


def test_dual_trace_never_rises():
    for z in np.linspace(0.05, 3.95, 30):
        tr = np.array(solve_saddle(np.ones((4, 1)), [z], U).dual_trace)
        assert np.all(np.diff(tr) <= 1e-12)
