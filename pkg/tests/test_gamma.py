import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import gamma_cdf_mp, gamma_pdf_mp, gamma_sf_mp, shorack_constant_mp, sup_psi_over_sqrt_k
from spacings_lab import DomainError
from spacings_lab.gamma import (
    gamma_cdf,
    gamma_cdf_second_derivative,
    gamma_eval,
    gamma_pdf,
    gamma_quantile,
    gamma_sf,
    gamma_tail_bound_check,
    log_gamma,
    psi,
    shorack_constant,
    shorack_limit,
    stirling_error,
)


# log_gamma

@pytest.mark.parametrize("x, expected", [(1.0, 0.0), (5.0, math.log(24.0)), (0.5, math.log(math.sqrt(math.pi)))])
def test_log_gamma_examples(x, expected):
    assert log_gamma(x) == pytest.approx(expected, abs=1e-14)


def test_log_gamma_relative_accuracy():
    import mpmath as mp
    for x in np.geomspace(0.5, 1e7, 60):
        ref = float(mp.loggamma(x))
        assert abs(log_gamma(float(x)) - ref) <= 1e-13 * max(1.0, abs(ref))


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_log_gamma_rejects_non_positive(x):
    with pytest.raises(DomainError):
        log_gamma(x)


def test_stirling_error_against_lgamma():
    for n in [0.5, 1.0, 7.0, 15.0, 16.0, 40.0, 100.0, 600.0, 1e5]:
        import mpmath as mp
        ref = float(mp.loggamma(n + 1) - (n + 0.5) * mp.log(n) + n - mp.log(mp.sqrt(2 * mp.pi)))
        assert stirling_error(n) == pytest.approx(ref, rel=1e-12, abs=1e-16)


# cdf / sf / pdf

def test_cdf_examples():
    assert gamma_cdf(1, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)
    # 1 - e^{-x} sum_{j<k} x^j / j!
    assert gamma_cdf(2, 2.0) == pytest.approx(1 - math.exp(-2) * 3, abs=1e-12)
    assert gamma_cdf(5, 0.0) == 0.0


def test_pdf_examples():
    assert gamma_pdf(1, 0.0) == 1.0
    assert gamma_pdf(2, 1.0) == pytest.approx(math.exp(-1), abs=1e-15)
    assert gamma_pdf(3, 0.0) == 0.0


@pytest.mark.parametrize("k", [1, 2, 3, 7, 30, 100, 1000, 10**5, 10**6])
def test_cdf_sf_pdf_against_mpmath(k):
    xs = k + math.sqrt(k) * np.array([-5.0, -2.0, -0.3, 0.0, 0.4, 1.5, 4.0, 8.0])
    xs = xs[xs > 0]
    for x in xs:
        assert abs(gamma_cdf(k, float(x)) - gamma_cdf_mp(k, x)) <= 1e-12
        assert gamma_sf(k, float(x)) == pytest.approx(gamma_sf_mp(k, x), rel=1e-10, abs=1e-300)
        assert gamma_pdf(k, float(x)) == pytest.approx(gamma_pdf_mp(k, x), rel=1e-10, abs=1e-300)


def test_cdf_rejects_negative():
    for fn in (gamma_cdf, gamma_pdf, psi, gamma_sf, gamma_cdf_second_derivative):
        with pytest.raises(DomainError):
            fn(2, -0.1)


@pytest.mark.parametrize("k", [0, -1, 2.5, 10**6 + 1, True])
def test_invalid_order(k):
    with pytest.raises(DomainError):
        gamma_cdf(k, 1.0)


def test_vectorised_matches_scalar():
    xs = np.linspace(0, 30, 41)
    vec = gamma_cdf(4, xs)
    assert np.array_equal(vec, np.array([gamma_cdf(4, float(x)) for x in xs]))


@pytest.mark.parametrize("k", list(range(1, 51)))
def test_pdf_is_derivative_of_cdf(k):
    h = 1e-4
    xs = np.geomspace(1e-3, 20 * k, 80)
    xs = xs[xs > h]
    fd = (gamma_cdf(k, xs + h) - gamma_cdf(k, xs - h)) / (2 * h)
    assert np.max(np.abs(fd - gamma_pdf(k, xs))) <= 1e-6


@given(k=st.integers(1, 300), x=st.floats(0, 2000), y=st.floats(0, 2000))
def test_cdf_monotone_and_bounded(k, x, y):
    lo, hi = sorted((x, y))
    a, b = gamma_cdf(k, lo), gamma_cdf(k, hi)
    assert 0.0 <= a <= b <= 1.0


@given(k=st.integers(1, 10**6), x=st.floats(0, 3e6))
def test_cdf_plus_sf_is_one(k, x):
    assert abs(gamma_cdf(k, x) + gamma_sf(k, x) - 1.0) <= 1e-12


# psi and second derivative

def test_psi_examples():
    assert psi(1, 1.0) == pytest.approx(math.exp(-1), abs=1e-15)
    assert psi(1, 0.0) == 0.0
    xs = np.linspace(0, 30, 300001)
    assert xs[np.argmax(psi(7, xs))] == pytest.approx(7.0, abs=1e-4)


def test_second_derivative_examples():
    assert gamma_cdf_second_derivative(1, 1.0) == pytest.approx(-math.exp(-1), abs=1e-15)
    assert gamma_cdf_second_derivative(2, 1.0) == pytest.approx(0.0, abs=1e-15)
    xs = np.linspace(0, 20, 200001)
    vals = np.abs(xs**2 * gamma_cdf_second_derivative(1, xs))
    # calculus: max of x^2 e^{-x} at x = 2
    assert vals.max() == pytest.approx(4 * math.exp(-2), abs=1e-9)
    assert xs[np.argmax(vals)] == pytest.approx(2.0, abs=1e-4)


def test_second_derivative_is_derivative_of_pdf():
    h = 1e-5
    for k in (1, 2, 5, 40):
        xs = np.linspace(0.1, 4 * k, 50)
        fd = (gamma_pdf(k, xs + h) - gamma_pdf(k, xs - h)) / (2 * h)
        assert np.max(np.abs(fd - gamma_cdf_second_derivative(k, xs))) <= 1e-7


def test_second_derivative_constant_bounded_and_stable():
    def sup_m(n_grid):
        best = 0.0
        for k in range(1, 201):
            xs = np.linspace(0, k + 40 * math.sqrt(k) + 40, n_grid)
            best = max(best, float(np.max(np.abs(xs**2 * gamma_cdf_second_derivative(k, xs) / k))))
        return best

    coarse, fine = sup_m(2001), sup_m(8001)
    assert fine < 1.0
    assert abs(fine - coarse) <= 1e-3


# quantile

def test_quantile_examples():
    assert gamma_quantile(1, 1 - math.exp(-1)) == pytest.approx(1.0, abs=1e-12)
    assert gamma_quantile(3, 0.0) == 0.0
    x = gamma_quantile(2, 0.5)
    assert abs(gamma_cdf_mp(2, x) - 0.5) <= 1e-12
    assert x == pytest.approx(1.678346990016661, abs=1e-9)


@pytest.mark.parametrize("p", [-0.1, 1.0, float("nan")])
def test_quantile_domain(p):
    with pytest.raises(DomainError):
        gamma_quantile(2, p)


@pytest.mark.parametrize("k", [1, 2, 5, 20, 100])
def test_quantile_roundtrip_where_cdf_is_resolvable(k):
    xs = np.linspace(5 * k / 500, 5 * k, 500)
    xs = xs[gamma_sf(k, xs) > 1e-6]
    back = gamma_quantile(k, gamma_cdf(k, xs))
    assert np.max(np.abs(back - xs)) <= 1e-8


def test_cdf_saturates_in_double_precision():
    # beyond this point H_k(x) == 1.0 exactly, so no quantile can recover x
    assert gamma_cdf(20, 82.2) == 1.0
    assert gamma_cdf(100, 207.0) == 1.0


@given(k=st.integers(1, 2000), p=st.floats(0, 0.999999), q=st.floats(0, 0.999999))
def test_quantile_monotone_and_accurate(k, p, q):
    lo, hi = sorted((p, q))
    a, b = gamma_quantile(k, lo), gamma_quantile(k, hi)
    assert a <= b
    assert abs(gamma_cdf(k, a) - lo) <= 1e-12


# constants

def test_shorack_constant_examples():
    assert shorack_constant(1) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert shorack_constant(2) == pytest.approx(math.sqrt(2**2.5 * math.exp(-2) / 2), abs=1e-15)
    assert shorack_limit() == pytest.approx((2 * math.pi) ** -0.25, abs=1e-15)


def test_shorack_constant_k2_value():
    # direct evaluation gives 0.61869700..., not the 0.618700520 quoted as an example
    assert shorack_constant(2) == pytest.approx(0.6186970067, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3, 10, 57, 200, 1000, 10**6])
def test_shorack_constant_against_mpmath(k):
    assert shorack_constant(k) == pytest.approx(shorack_constant_mp(k), rel=1e-14)


def test_shorack_constant_is_psi_sup():
    for k in range(1, 201):
        assert abs(shorack_constant(k) ** 2 - sup_psi_over_sqrt_k(k)) <= 1e-12


def test_shorack_constant_monotone_limit():
    K = np.array([shorack_constant(k) for k in range(1, 102)])
    assert np.all(np.diff(K) > 0)
    assert np.all(K < shorack_limit())
    assert abs(shorack_constant(1000) - shorack_limit()) < 3e-5
    assert shorack_constant(1000) / shorack_limit() == pytest.approx(1 - 1 / 24000, abs=1e-6)


# tail bound

def test_tail_bound_examples():
    rec = gamma_tail_bound_check(1, 3.0)
    assert rec.tail == pytest.approx(math.exp(-3)) and rec.bound == pytest.approx(2 * math.exp(-3)) and rec.holds
    rec = gamma_tail_bound_check(2, 4.0)
    assert rec.tail == pytest.approx(5 * math.exp(-4), rel=1e-12)
    assert rec.bound == pytest.approx(8 * math.exp(-4), rel=1e-12)
    assert rec.holds
    assert gamma_tail_bound_check(10, 20.0).holds


def test_tail_bound_precondition():
    with pytest.raises(DomainError):
        gamma_tail_bound_check(3, 5.9)


def test_tail_bound_grid():
    for k in np.unique(np.geomspace(1, 10**4, 50).astype(int)):
        for x in np.linspace(2 * k, 2 * k + 40 * math.sqrt(k) + 40, 50):
            assert gamma_tail_bound_check(int(k), float(x)).holds


def test_gamma_eval_bundle():
    ev = gamma_eval(3, 2.0)
    assert ev.cdf == gamma_cdf(3, 2.0) and ev.pdf == gamma_pdf(3, 2.0)
    assert ev.second_derivative == gamma_cdf_second_derivative(3, 2.0)
