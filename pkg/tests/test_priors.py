import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdfproj.errors import CgfDomainError, SupportViolation
from pdfproj.priors import (
    PriorKind,
    cgf,
    log_pdf,
    sample_prior,
    uniform_cgf_closed_form,
    uniform_cgf_series,
)

G, U, E = PriorKind.STD_GAUSSIAN, PriorKind.UNIFORM01, PriorKind.EXPONENTIAL1


def test_log_pdf_examples():
    assert log_pdf(G, [0.0, 0.0]) == pytest.approx(-math.log(2 * math.pi), abs=1e-12)
    assert log_pdf(U, [0.2, 0.9]) == 0.0
    assert log_pdf(E, [1.0]) == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("prior,x", [(U, [1.2]), (U, [-0.1]), (E, [-1e-9]), (G, [math.nan])])
def test_log_pdf_outside_support(prior, x):
    with pytest.raises(SupportViolation):
        log_pdf(prior, x)


def test_sample_prior_mean_and_determinism():
    a = sample_prior(U, 2, 10_000, 7)
    assert a.shape == (10_000, 2)
    assert np.all(np.abs(a.mean(axis=0) - 0.5) < 0.02)
    assert np.array_equal(a, sample_prior(U, 2, 10_000, 7))
    assert sample_prior(U, 2, 0, 7).shape == (0, 2)


def test_cgf_examples():
    c = cgf(U, 0.0)
    assert (c.value, c.d1, c.d2) == pytest.approx((0.0, 0.5, 1 / 12), abs=1e-15)
    assert cgf(U, 10.0).value == pytest.approx(math.log(math.expm1(10.0) / 10.0), abs=1e-12)
    assert cgf(U, 10.0).value == pytest.approx(7.697369, abs=1e-6)
    c = cgf(E, 0.5)
    assert (c.value, c.d1, c.d2) == pytest.approx((math.log(2), 2.0, 4.0), rel=1e-14)
    c = cgf(G, 1.7)
    assert (c.value, c.d1, c.d2) == pytest.approx((1.7**2 / 2, 1.7, 1.0))


def test_exponential_cgf_domain():
    with pytest.raises(CgfDomainError):
        cgf(E, 1.0)


@pytest.mark.parametrize("a", [1e-3, -1e-3])
def test_uniform_series_matches_closed_form(a):
    s, c = uniform_cgf_series(a), uniform_cgf_closed_form(a)
    assert abs(s.value - c.value) <= 1e-12
    assert abs(s.d1 - c.d1) <= 1e-12
    assert abs(s.d2 - c.d2) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.sampled_from([G, U]))
def test_cgf_derivatives_match_finite_differences(a, prior):
    h = 1e-5
    c = cgf(prior, a)
    d1 = (cgf(prior, a + h).value - cgf(prior, a - h).value) / (2 * h)
    d2 = (cgf(prior, a + h).d1 - cgf(prior, a - h).d1) / (2 * h)
    assert d1 == pytest.approx(c.d1, rel=1e-6, abs=1e-8)
    assert d2 == pytest.approx(c.d2, rel=1e-5, abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(-40, 0.9))
def test_exponential_cgf_derivatives(a):
    h = 1e-6 * (1 - a)
    c = cgf(E, a)
    d1 = (cgf(E, a + h).value - cgf(E, a - h).value) / (2 * h)
    assert d1 == pytest.approx(c.d1, rel=1e-6)


@given(st.floats(-200, 200))
def test_uniform_cgf_is_symmetric_about_half(a):
    # K(-a) = K(a) - a for Uniform(0, 1)
    assert cgf(U, -a).value == pytest.approx(cgf(U, a).value - a, abs=1e-11 * (1 + abs(a)))
    assert 0.0 < cgf(U, a).d1 < 1.0
    assert cgf(U, a).d2 > 0.0
