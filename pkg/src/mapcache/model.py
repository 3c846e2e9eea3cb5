"""Analytic LRU miss-rate model for Generalized-Zipf (GZipf) popularity.

Objects with normalized frequency ``nu`` occur with density
``∝ 1 / (mu nu^r + (lam - mu) nu^q)``: exponent ``q`` governs popular
objects, ``r`` the rare ones, and the two terms balance at the crossover
frequency ``nu_k``. Under independent references the inter-reference
distance law is a two-regime power law, ``t^(q-3)`` below ``1/nu_k`` and
``t^(r-3)`` above; integrating it twice (working-set theory) gives the
miss rate as a power law of the cache size in each regime.

Constants the derivation leaves implicit are pinned by the normalization
``C`` of the distance law and by continuity at regime boundaries.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math
import warnings

import numpy as np
from scipy import integrate, optimize

from .errors import DataError
from .special import generalized_harmonic, hurwitz_zeta, upper_incomplete_gamma


@dataclass(frozen=True)
class GZipfParams:
    """GZipf popularity parameters.

    Attributes
    ----------
    q, r : float
        High- and low-frequency exponents, ``1 <= r < q``.
    mu, lam : float
        Crossover constants, ``lam > mu > 0``.
    n_refs : int
        Reference-string length ``N``; only enters ``c_norm``.
    """

    q: float
    r: float
    mu: float = 1.0
    lam: float = 2.5
    n_refs: int = 10 ** 6

    def __post_init__(self):
        if not 1 <= self.r < self.q:
            raise DataError(f"need 1 <= r < q, got q={self.q}, r={self.r}")
        if not self.lam > self.mu > 0:
            raise DataError(f"need lam > mu > 0, got mu={self.mu}, lam={self.lam}")
        if self.n_refs < 2:
            raise DataError("n_refs must be >= 2")
        if not 0 < self.nu_k <= 1:
            raise DataError(f"crossover frequency {self.nu_k} outside (0, 1]; need lam >= 2 mu")

    @classmethod
    def from_crossover(cls, q, r, nu_k, n_refs=10 ** 6, mu=1.0):
        """Build parameters that put the crossover at frequency ``nu_k``."""
        lam = mu * (1.0 + nu_k ** -(q - r))
        return cls(q=q, r=r, mu=mu, lam=lam, n_refs=n_refs)

    def replace(self, **changes):
        kw = dict(q=self.q, r=self.r, mu=self.mu, lam=self.lam, n_refs=self.n_refs)
        kw.update(changes)
        return GZipfParams(**kw)

    @property
    def nu_k(self):
        """Frequency where ``mu nu^r == (lam - mu) nu^q``."""
        return (self.mu / (self.lam - self.mu)) ** (1.0 / (self.q - self.r))

    @property
    def t_k(self):
        """Crossover inter-reference distance ``1 / nu_k``."""
        return 1.0 / self.nu_k

    @cached_property
    def c_norm(self):
        return normalization_c(self)

    def to_dict(self):
        """Fields plus the derived ``nu_k`` and ``c_norm`` (ignored by :meth:`from_dict`)."""
        return {"kind": "gzipf", "q": self.q, "r": self.r, "mu": self.mu,
                "lambda": self.lam, "n_refs": self.n_refs,
                "nu_k": self.nu_k, "c_norm": self.c_norm}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(q=float(d["q"]), r=float(d["r"]), mu=float(d.get("mu", 1.0)),
                       lam=float(d.get("lambda", 2.5)), n_refs=int(d.get("n_refs", 10 ** 6)))
        except KeyError as e:
            raise DataError(f"GZipf parameters need field {e.args[0]!r}") from None


@dataclass(frozen=True)
class ThreeRegionParams:
    """Three power-law regimes with crossovers ``nu_k1 > nu_k2``.

    ``n_objects``, when given, adds the compulsory (first-reference) miss
    floor ``n_objects / n_refs`` that the distance law does not describe.
    """

    alphas: tuple
    crossover_freqs: tuple
    n_refs: int
    n_objects: int = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "crossover_freqs", tuple(float(v) for v in self.crossover_freqs))
        if len(self.alphas) != 3 or len(self.crossover_freqs) != 2:
            raise DataError("need three exponents and two crossover frequencies")
        if not all(1 < a < 2 for a in self.alphas):
            raise DataError(f"exponents must lie in (1, 2), got {self.alphas}")
        k1, k2 = self.crossover_freqs
        if not 1 > k1 > k2 > 0:
            raise DataError(f"need 1 > nu_k1 > nu_k2 > 0, got {self.crossover_freqs}")

    def to_dict(self):
        return {"kind": "three_region", "alphas": list(self.alphas),
                "crossover_freqs": list(self.crossover_freqs),
                "n_refs": self.n_refs, "n_objects": self.n_objects}

    @classmethod
    def from_dict(cls, d):
        try:
            n_obj = d.get("n_objects")
            return cls(tuple(d["alphas"]), tuple(d["crossover_freqs"]), int(d["n_refs"]),
                       None if n_obj is None else int(n_obj))
        except KeyError as e:
            raise DataError(f"three-region parameters need field {e.args[0]!r}") from None


@dataclass(frozen=True)
class MissRateCurve:
    """Cache sizes and miss rates, tagged ``analytic`` or ``empirical``."""

    sizes: np.ndarray
    miss_rates: np.ndarray
    source: str = field(default="analytic")

    def __post_init__(self):
        object.__setattr__(self, "sizes", np.asarray(self.sizes, dtype=np.float64))
        object.__setattr__(self, "miss_rates", np.asarray(self.miss_rates, dtype=np.float64))

    def __len__(self):
        return self.sizes.shape[0]

    def points(self):
        return list(zip(self.sizes.tolist(), self.miss_rates.tolist()))

    def size_at(self, m):
        """Smallest size reaching miss rate ``m``, log-log interpolated."""
        sizes, rates = self.sizes, self.miss_rates
        if not rates.min() <= m <= rates.max():
            raise DataError(f"miss rate {m} outside achieved range "
                            f"[{rates.min():.4g}, {rates.max():.4g}]")
        j = int(np.argmax(rates <= m))
        if j == 0 or rates[j] == m:
            return float(sizes[j])
        m0, m1 = math.log(rates[j - 1]), math.log(rates[j])
        s0, s1 = math.log(sizes[j - 1]), math.log(sizes[j])
        return math.exp(s0 + (math.log(m) - m0) * (s1 - s0) / (m1 - m0))


# -- distributions ------------------------------------------------------------

def _check_nu(nu):
    if not 0 < nu <= 1:
        raise DataError(f"frequency must lie in (0, 1], got {nu}")


def _pdf_kernel(nu, p):
    return 1.0 / (p.mu * nu ** p.r + (p.lam - p.mu) * nu ** p.q)


def _pdf_norm(p):
    lo = 1.0 / p.n_refs
    # integrate in log nu: the density spans many decades
    f = lambda u: _pdf_kernel(math.exp(u), p) * math.exp(u)
    brk = [math.log(p.nu_k)] if lo < p.nu_k < 1 else None
    val, _ = integrate.quad(f, math.log(lo), 0.0, points=brk, limit=200,
                            epsabs=0, epsrel=1e-12)
    return 1.0 / val


def gzipf_pdf(nu, p):
    """GZipf frequency density, normalized to one over ``[1/N, 1]``."""
    _check_nu(nu)
    return _pdf_norm(p) * _pdf_kernel(nu, p)


def normalization_c(p):
    """Normalization of the inter-reference law over distances ``1..N-1``.

    ``1/C = H(1/nu_k, 3-q) - ζ(3-r, N) + ζ(3-r, 1/nu_k)`` with ``1/nu_k``
    rounded to the nearest integer >= 1.
    """
    tk = max(1, round(p.t_k))
    inv = (generalized_harmonic(tk, 3 - p.q)
           - hurwitz_zeta(3 - p.r, p.n_refs)
           + hurwitz_zeta(3 - p.r, tk))
    c = 1.0 / inv
    if not math.isfinite(c) or c <= 0:
        raise DataError(f"normalization constant not finite/positive: {c}")
    return c


def inter_ref_exact_head(t, p):
    """Unnormalized head-regime distance law ``Γ(3-q, nu_k t) / t^(3-q)``."""
    if t <= 0:
        raise DataError("distance must be positive")
    a = 3 - p.q
    return upper_incomplete_gamma(a, p.nu_k * t) / t ** a


def inter_ref_asymptotic(t, p):
    """Two-regime power-law distance law, ``C t^(q-3)`` then ``∝ t^(r-3)``.

    The tail constant makes the law continuous at ``t = 1/nu_k``.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0):
        raise DataError("distance must be positive")
    c, tk = p.c_norm, p.t_k
    out = np.where(t < tk,
                   c * t ** (p.q - 3),
                   c * tk ** (p.q - p.r) * t ** (p.r - 3))
    return out if out.ndim else float(out)


# -- miss rate versus cache size ------------------------------------------------

def _check_model_domain(p):
    if not 1 < p.r < p.q < 2:
        raise DataError(f"miss-rate model needs 1 < r < q < 2, got q={p.q}, r={p.r}")


def g(x, c):
    """Prefactor of ``s(m) = g(x) m^(1 - 1/(2-x))`` for exponent ``x`` in (1, 2)."""
    return math.exp(_log_g(x, c))


def _log_g(x, c):
    # 2 - 3x + x^2 = (x-1)(x-2) is negative on (1, 2)
    return (math.log(c) / (2 - x) + (x - 1) / (x - 2) * math.log(2 - x)
            - math.log((x - 1) * (2 - x)))


def _head_miss(s, x, c):
    return (c ** (1 / (x - 1)) * (2 - x) ** (-1 / (x - 1))
            * (x - 1) ** ((x - 2) / (x - 1)) * s ** ((x - 2) / (x - 1)))


def _ws_size(t, x, c):
    """Average working-set size at window ``t`` for distance law ``c t^(x-3)``."""
    return c * t ** (x - 1) / ((x - 1) * (2 - x))


def _ws_miss(t, x, c):
    return c * t ** (x - 2) / (2 - x)


def crossover_size(p):
    """Cache size at which the head regime hands over to the tail."""
    _check_model_domain(p)
    return _ws_size(p.t_k, p.q, p.c_norm)


def crossover_miss_rate(p):
    """Miss rate ``m_k`` at :func:`crossover_size`."""
    _check_model_domain(p)
    return _ws_miss(p.t_k, p.q, p.c_norm)


def _clamp(m, scalar):
    if np.any(m > 1):
        warnings.warn("model miss rate exceeds 1 below its validity floor; clamped",
                      RuntimeWarning, stacklevel=3)
        m = np.minimum(m, 1.0)
    return float(m) if scalar else m


def miss_rate_of_size(s, p):
    """Model miss rate of an LRU cache holding ``s`` entries.

    Head regime ``∝ s^(1 - 1/(q-1))`` below :func:`crossover_size`, tail
    regime ``∝ s^(1 - 1/(r-1))`` above, continuous at the crossover.
    """
    _check_model_domain(p)
    scalar = np.ndim(s) == 0
    s = np.asarray(s, dtype=np.float64)
    if np.any(s <= 0):
        raise DataError("cache size must be positive")
    c = p.c_norm
    sx, mx = crossover_size(p), crossover_miss_rate(p)
    tail_exp = 1 - 1 / (p.r - 1)
    m = np.where(s < sx, _head_miss(s, p.q, c), mx * (s / sx) ** tail_exp)
    return _clamp(m, scalar)


def size_of_miss_rate(m, p):
    """Cache size needed for miss rate ``m`` in (0, 1); inverse of :func:`miss_rate_of_size`.

    Miss rates at or above :func:`crossover_miss_rate` fall in the head
    regime, lower ones in the tail regime.
    """
    _check_model_domain(p)
    scalar = np.ndim(m) == 0
    m = np.asarray(m, dtype=np.float64)
    if np.any((m <= 0) | (m >= 1)):
        raise DataError("miss rate must lie in (0, 1)")
    c = p.c_norm
    sx, mx = crossover_size(p), crossover_miss_rate(p)
    tail_exp = 1 - 1 / (p.r - 1)
    with np.errstate(over="ignore"):
        s = np.where(m >= mx,
                     np.exp(_log_g(p.q, c) + (1 - 1 / (2 - p.q)) * np.log(m)),
                     sx * (m / mx) ** (1 / tail_exp))
    if not np.all(np.isfinite(s)):
        raise DataError("cache size overflows; near q = 2 use size_of_miss_rate_anchored")
    return float(s) if scalar else s


def size_of_miss_rate_q2(m, c):
    """Cache size for miss rate ``m`` when the head exponent equals 2."""
    if c <= 0:
        raise DataError("normalization constant must be positive")
    if not 0 < m < 1:
        raise DataError("miss rate must lie in (0, 1)")
    return (c + m) * math.exp(-m / c)


def size_of_miss_rate_anchored(m, q, c):
    """Working-set chain with the integration constants of the ``q = 2`` case.

    With ``m(t) = C (t^(q-2) - 1) / (2 - q)`` (so ``m(1) = 0``) and
    ``s(t) = ∫_0^t m``, eliminating ``t`` gives a size that tends to
    :func:`size_of_miss_rate_q2` as ``q -> 2``. The pure power laws of
    :func:`size_of_miss_rate` drop these constants and have no finite limit.
    """
    if not 1 < q < 2:
        raise DataError("q must lie in (1, 2)")
    eps = 2 - q
    # t^(q-2) = 1 + m eps / C
    t = (1 + m * eps / c) ** (-1 / eps)
    return c * (t ** (q - 1) / (q - 1) - t) / eps


# -- exact working-set chain over distances t >= 1 -------------------------------

def miss_rate_of_window(t, p):
    """Miss rate at window ``t``: tail mass of :func:`inter_ref_asymptotic` beyond ``t``."""
    _check_model_domain(p)
    c, tk, q, r = p.c_norm, p.t_k, p.q, p.r
    if t >= tk:
        return c * tk ** (q - r) * t ** (r - 2) / (2 - r)
    return c * (t ** (q - 2) - tk ** (q - 2)) / (2 - q) + c * tk ** (q - 2) / (2 - r)


def working_set_size(t, p):
    """Average working-set size ``∫_1^t m(x) dx`` for windows ``t >= 1``."""
    _check_model_domain(p)
    c, tk, q, r = p.c_norm, p.t_k, p.q, p.r

    def head(a, b):
        return c * ((b ** (q - 1) - a ** (q - 1)) / ((q - 1) * (2 - q))
                    + (b - a) * tk ** (q - 2) * (1 / (2 - r) - 1 / (2 - q)))

    if t <= tk:
        return head(1.0, t)
    return head(1.0, tk) + c * tk ** (q - r) * (t ** (r - 1) - tk ** (r - 1)) / ((r - 1) * (2 - r))


def size_of_miss_rate_exact(m, p):
    """Cache size for miss rate ``m`` from the exact chain, solved numerically.

    Unlike :func:`size_of_miss_rate` it keeps the lower limit ``t = 1`` of
    the working-set integral, so it stays finite as ``q -> 1``. Returns 0
    when even a one-reference window meets ``m``.
    """
    if not 0 < m < 1:
        raise DataError("miss rate must lie in (0, 1)")
    if m >= miss_rate_of_window(1.0, p):
        return 0.0
    f = lambda u: math.log(miss_rate_of_window(math.exp(u), p)) - math.log(m)
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    u = optimize.brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-14)
    return working_set_size(math.exp(u), p)


def sensitivity_curve(m_fixed, exponent_grid, p_base, pin_r=False):
    """Cache size for a fixed miss rate as the GZipf exponents vary.

    ``q`` follows the grid; ``r`` keeps its offset ``q - r`` from
    ``p_base`` or, with ``pin_r``, stays at ``p_base.r``. The crossover
    frequency and ``N`` are held at their ``p_base`` values; ``C`` is
    recomputed per point. Sizes come from :func:`size_of_miss_rate_exact`.

    Returns
    -------
    list of (float, float)
        ``(exponent, size)`` pairs.
    """
    offset = p_base.q - p_base.r
    out = []
    for x in exponent_grid:
        if not 1 < x < 2:
            raise DataError(f"exponent {x} outside (1, 2)")
        r = p_base.r if pin_r else x - offset
        if not 1 < r < x:
            raise DataError(f"exponent {x} leaves r={r} outside (1, q)")
        p = GZipfParams.from_crossover(x, r, p_base.nu_k, p_base.n_refs, mu=p_base.mu)
        out.append((float(x), size_of_miss_rate_exact(m_fixed, p)))
    return out


# -- three-region extension -------------------------------------------------------

def _three_region_norm(p3):
    """Normalization of the continuous three-piece distance law over ``1..N-1``."""
    a1, a2, a3 = p3.alphas
    t1 = max(2, round(1 / p3.crossover_freqs[0]))
    t2 = max(t1 + 1, round(1 / p3.crossover_freqs[1]))
    n = p3.n_refs
    if t2 >= n:
        raise DataError("second crossover lies beyond the trace length")
    k2 = t1 ** (a1 - a2)
    k3 = k2 * t2 ** (a2 - a3)
    inv = (generalized_harmonic(t1 - 1, 3 - a1)
           + k2 * (hurwitz_zeta(3 - a2, t1) - hurwitz_zeta(3 - a2, t2))
           + k3 * (hurwitz_zeta(3 - a3, t2) - hurwitz_zeta(3 - a3, n)))
    return 1.0 / inv


def three_region_boundaries(p3, sizes=None):
    """Cache sizes and miss rates at the two regime boundaries.

    By default each boundary is the working-set size at window ``1/nu_ki``
    of the regime that ends there, with regime constants continuous in the
    distance domain. ``sizes=(s1, s2)`` places the boundaries explicitly
    instead, e.g. at breakpoints read off an empirical curve.

    Returns
    -------
    ((s1, m1), (s2, m2), c1)
        ``c1`` is the normalization of the first regime.
    """
    a1, a2, _ = p3.alphas
    c1 = _three_region_norm(p3)
    if sizes is None:
        t1, t2 = 1 / p3.crossover_freqs[0], 1 / p3.crossover_freqs[1]
        s1 = _ws_size(t1, a1, c1)
        s2 = _ws_size(t2, a2, c1 * t1 ** (a1 - a2))
    else:
        s1, s2 = (float(v) for v in sizes)
    if not s2 > s1 > 0:
        raise DataError(f"inconsistent regime boundaries: s1={s1:.4g}, s2={s2:.4g}")
    m1 = _head_miss(s1, a1, c1)
    # second regime continues from (s1, m1) with its own slope
    m2 = m1 * (s2 / s1) ** (1 - 1 / (a2 - 1))
    return (s1, m1), (s2, m2), c1


def three_region_miss_curve(p3, sizes, boundaries=None):
    """Piecewise power-law miss rate with slopes ``1 - 1/(alpha_i - 1)``.

    Continuous at both boundaries (see :func:`three_region_boundaries`);
    the first regime is the single-regime head law with the three-piece
    normalization. When ``p3.n_objects`` is set the compulsory rate
    ``D/N`` is added to the reuse misses.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    if np.any(sizes <= 0):
        raise DataError("cache size must be positive")
    a1, a2, a3 = p3.alphas
    (s1, m1), (s2, m2), c1 = three_region_boundaries(p3, boundaries)
    e2, e3 = 1 - 1 / (a2 - 1), 1 - 1 / (a3 - 1)
    m = np.where(sizes < s1, _head_miss(sizes, a1, c1),
                 np.where(sizes < s2, m1 * (sizes / s1) ** e2, m2 * (sizes / s2) ** e3))
    if p3.n_objects:
        floor = p3.n_objects / p3.n_refs
        m = floor + (1 - floor) * m
    return MissRateCurve(sizes, _clamp(m, False), "analytic")
