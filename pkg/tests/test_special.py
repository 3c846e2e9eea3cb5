import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mapcache.errors import DataError
from mapcache.special import generalized_harmonic, hurwitz_zeta, upper_incomplete_gamma


def rel(a, b):
    return abs(a - b) / abs(b)


# -- incomplete gamma ---------------------------------------------------------------

@pytest.mark.parametrize("z", [0.1, 1.0, 2.0, 10.0, 50.0])
def test_gamma_order_one_is_exponential(z):
    assert rel(upper_incomplete_gamma(1.0, z), math.exp(-z)) < 1e-12


def test_gamma_at_zero_is_complete_gamma():
    assert upper_incomplete_gamma(1.5, 0.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)
    assert upper_incomplete_gamma(1.5, 0.0) == pytest.approx(0.8862269255, abs=1e-10)


def test_gamma_against_quadrature():
    a, z = 1.3, 0.7
    oracle, err = integrate.quad(lambda x: x ** (a - 1) * math.exp(-x), z, np.inf,
                                 epsabs=0, epsrel=1e-13)
    assert rel(upper_incomplete_gamma(a, z), oracle) < 1e-9


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0.05, 3.0), z=st.floats(0.0, 60.0))
def test_gamma_against_mpmath(a, z):
    ref = float(mpmath.gammainc(a, z))
    assert rel(upper_incomplete_gamma(a, z), ref) < 1e-10


def test_gamma_both_algorithms_meet():
    # z = a + 1 is where the series hands over to the continued fraction
    a = 1.7
    below = upper_incomplete_gamma(a, a + 1 - 1e-9)
    above = upper_incomplete_gamma(a, a + 1 + 1e-9)
    assert rel(below, above) < 1e-8


def test_gamma_divergent_case_rejected():
    with pytest.raises(DataError):
        upper_incomplete_gamma(0.0, 0.0)
    with pytest.raises(DataError):
        upper_incomplete_gamma(1.0, -1.0)


# -- Hurwitz zeta ---------------------------------------------------------------------

def test_zeta_two_is_basel():
    assert rel(hurwitz_zeta(2.0, 1.0), math.pi ** 2 / 6) < 1e-12


@pytest.mark.parametrize("s", [1.05, 1.3, 2.0, 3.7])
def test_zeta_telescopes(s):
    assert hurwitz_zeta(s, 1.0) - hurwitz_zeta(s, 2.0) == pytest.approx(1.0, abs=1e-12)


def test_zeta_partial_sum_oracle():
    s, a, n = 1.8, 3.5, 10 ** 7
    k = np.arange(n, dtype=np.float64)
    head = math.fsum(((k + a) ** -s).tolist())
    # midpoint integral tail; its error is O(n^-(s+1))
    tail = (n + a - 0.5) ** (1 - s) / (s - 1)
    assert rel(hurwitz_zeta(s, a), head + tail) < 1e-8


@settings(max_examples=100, deadline=None)
@given(s=st.floats(1.01, 4.0), a=st.floats(0.01, 1e7))
def test_zeta_against_mpmath(s, a):
    assert rel(hurwitz_zeta(s, a), float(mpmath.zeta(s, a))) < 1e-9


def test_zeta_requires_s_above_one():
    with pytest.raises(DataError):
        hurwitz_zeta(1.0, 1.0)
    with pytest.raises(DataError):
        hurwitz_zeta(2.0, 0.0)


# -- generalized harmonic numbers --------------------------------------------------------

def test_harmonic_small():
    assert generalized_harmonic(3, 1) == pytest.approx(1 + 1 / 2 + 1 / 3, rel=1e-15)


@pytest.mark.parametrize("m", [-1.0, 0.0, 0.5, 1.2, 3.0])
def test_harmonic_of_one(m):
    assert generalized_harmonic(1, m) == 1.0


def test_harmonic_zeta_difference():
    n, m = 10 ** 6, 1.2
    oracle = float(mpmath.zeta(m, 1) - mpmath.zeta(m, n + 1))
    assert rel(generalized_harmonic(n, m), oracle) < 1e-9


def test_harmonic_beyond_direct_limit():
    n = 10 ** 10
    # the zeta difference holds for any m != 1 through analytic continuation
    with mpmath.workdps(30):
        for m in (0.7, 1.3):
            oracle = float(mpmath.zeta(m, 1) - mpmath.zeta(m, n + 1))
            assert rel(generalized_harmonic(n, m), oracle) < 1e-9
        oracle = float(mpmath.harmonic(n))
        assert rel(generalized_harmonic(n, 1.0), oracle) < 1e-9


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 5000), m=st.floats(-1.0, 3.0))
def test_harmonic_direct_sum(n, m):
    oracle = math.fsum(k ** -m for k in range(1, n + 1))
    assert rel(generalized_harmonic(n, m), oracle) < 1e-12


def test_harmonic_rejects_bad_order():
    with pytest.raises(DataError):
        generalized_harmonic(0, 1.0)
