"""Special functions used by the analytic cache model.

* upper incomplete gamma: power series below ``a + 1``, Lentz continued
  fraction above;
* Hurwitz zeta: direct sum followed by an Euler-Maclaurin tail;
* generalized harmonic numbers: chunked direct summation, or a zeta
  difference / Euler-Maclaurin sum for very large ``n``.
"""
import math

import numpy as np

from .errors import DataError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000

# B_2, B_4, ..., B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)
_EM_START = 12.0
HARMONIC_DIRECT_LIMIT = 10 ** 8


def upper_incomplete_gamma(a, z):
    """Upper incomplete gamma function ``Γ(a, z) = ∫_z^∞ x^(a-1) e^(-x) dx``.

    Parameters
    ----------
    a : float
        Shape, ``a > 0``.
    z : float
        Lower integration limit, ``z >= 0``.
    """
    a = float(a)
    z = float(z)
    if z < 0 or math.isnan(z):
        raise DataError(f"incomplete gamma needs z >= 0, got {z}")
    if a <= 0:
        if z == 0:
            raise DataError("Γ(a, 0) diverges for a <= 0")
        raise DataError(f"incomplete gamma implemented for a > 0, got {a}")
    if z == 0:
        return math.gamma(a)
    if z < a + 1.0:
        return math.gamma(a) - _lower_gamma_series(a, z)
    return _upper_gamma_cf(a, z)


def _lower_gamma_series(a, z):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * math.exp(-z + a * math.log(z))


def _upper_gamma_cf(a, z):
    # modified Lentz on the even part of the Legendre continued fraction
    b = z + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return math.exp(-z + a * math.log(z)) * h


def _rising(s, n):
    out = 1.0
    for k in range(n):
        out *= s + k
    return out


def hurwitz_zeta(s, a):
    """Hurwitz zeta ``ζ(s, a) = Σ_{k>=0} (k + a)^(-s)`` for ``s > 1``, ``a > 0``."""
    s = float(s)
    a = float(a)
    if not s > 1:
        raise DataError(f"Hurwitz zeta requires s > 1, got {s}")
    if not a > 0:
        raise DataError(f"Hurwitz zeta requires a > 0, got {a}")
    m = max(0, math.ceil(_EM_START - a))
    head = math.fsum((k + a) ** -s for k in range(m))
    x = a + m
    terms = [x ** (1 - s) / (s - 1), 0.5 * x ** -s]
    fact = 1.0
    for j, b2j in enumerate(_BERNOULLI, 1):
        fact *= (2 * j - 1) * (2 * j)
        terms.append(b2j / fact * _rising(s, 2 * j - 1) * x ** (-s - 2 * j + 1))
    return head + math.fsum(terms)


def _power_sum_em(m, lo, hi):
    """Σ_{k=lo}^{hi} k^(-m) by Euler-Maclaurin; lo >= 12 keeps it accurate."""
    if m == 1:
        integral = math.log(hi / lo)
    else:
        integral = (hi ** (1 - m) - lo ** (1 - m)) / (1 - m)
    terms = [integral, 0.5 * (lo ** -m + hi ** -m)]
    fact = 1.0
    for j, b2j in enumerate(_BERNOULLI, 1):
        fact *= (2 * j - 1) * (2 * j)
        p = 2 * j - 1
        # d^p/dx^p x^-m = (-1)^p (m)_p x^(-m-p)
        coef = -_rising(m, p)
        terms.append(b2j / fact * coef * (hi ** (-m - p) - lo ** (-m - p)))
    return math.fsum(terms)


def generalized_harmonic(n, m):
    """Generalized harmonic number ``H(n, m) = Σ_{k=1}^{n} k^(-m)``."""
    n = int(n)
    m = float(m)
    if n < 1:
        raise DataError(f"harmonic number needs n >= 1, got {n}")
    if n <= HARMONIC_DIRECT_LIMIT:
        chunk = 1 << 20
        parts = []
        # smallest terms first
        for hi in range(n, 0, -chunk):
            lo = max(1, hi - chunk + 1)
            k = np.arange(lo, hi + 1, dtype=np.float64)
            parts.append(float(np.sum(k ** -m)))
        return math.fsum(parts)
    if m > 1:
        return hurwitz_zeta(m, 1.0) - hurwitz_zeta(m, n + 1.0)
    return generalized_harmonic(11, m) + _power_sum_em(m, 12.0, float(n))
