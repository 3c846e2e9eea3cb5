import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mapcache.errors import DataError
from mapcache.model import (
    GZipfParams,
    MissRateCurve,
    ThreeRegionParams,
    crossover_miss_rate,
    crossover_size,
    gzipf_pdf,
    inter_ref_asymptotic,
    inter_ref_exact_head,
    miss_rate_of_size,
    normalization_c,
    sensitivity_curve,
    size_of_miss_rate,
    size_of_miss_rate_anchored,
    size_of_miss_rate_q2,
    three_region_boundaries,
    three_region_miss_curve,
)

BASE = GZipfParams.from_crossover(1.7, 1.3, 1e-3, 10 ** 6)


def loglog_slope(f, a, b):
    return (math.log(f(b)) - math.log(f(a))) / (math.log(b) - math.log(a))


params = st.builds(
    lambda q, u, lognu, logn: GZipfParams.from_crossover(
        q, 1.02 + u * (q - 1.07), 10 ** lognu, int(10 ** logn)),
    q=st.floats(1.2, 1.9), u=st.floats(0.0, 1.0), lognu=st.floats(-5, -1),
    logn=st.floats(5, 9),
)


# -- parameters ---------------------------------------------------------------------------

@given(params)
def test_crossover_balances_denominator(p):
    lhs = p.mu * p.nu_k ** p.r
    rhs = (p.lam - p.mu) * p.nu_k ** p.q
    assert abs(lhs - rhs) <= 1e-12 * max(lhs, rhs)


def test_crossover_exponent():
    p = GZipfParams(q=1.7, r=1.2, mu=1.0, lam=5.0)
    assert p.nu_k == pytest.approx(0.25 ** (1 / 0.5), rel=1e-15)


@pytest.mark.parametrize("kw", [dict(q=1.5, r=1.5), dict(q=1.5, r=1.6), dict(q=1.5, r=0.9),
                                dict(q=1.5, r=1.2, mu=0.0), dict(q=1.5, r=1.2, lam=0.5),
                                dict(q=1.5, r=1.2, mu=1.0, lam=1.5)])
def test_invalid_parameters_rejected(kw):
    with pytest.raises(DataError):
        GZipfParams(**kw)


def test_from_crossover_round_trip():
    p = GZipfParams.from_crossover(1.6, 1.25, 3e-4)
    assert p.nu_k == pytest.approx(3e-4, rel=1e-12)


def test_params_dict_round_trip():
    d = BASE.to_dict()
    assert list(d)[:6] == ["kind", "q", "r", "mu", "lambda", "n_refs"]
    assert GZipfParams.from_dict(d) == BASE


# -- densities ---------------------------------------------------------------------------------

def test_pdf_integrates_to_one():
    p = GZipfParams(q=1.7, r=1.2, mu=1.0, lam=4.0, n_refs=10 ** 6)
    lo = 1 / p.n_refs
    # independent check in linear nu with mpmath, splitting at the crossover
    total = mpmath.quad(lambda v: gzipf_pdf(float(v), p), [lo, 1e-4, 1e-2, p.nu_k, 1])
    assert float(total) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("nu", [0.0, -0.1, 1.5])
def test_pdf_domain(nu):
    with pytest.raises(DataError):
        gzipf_pdf(nu, BASE)


def test_normalization_head_only_substitution():
    p = GZipfParams(q=1.7, r=1.2, mu=1.0, lam=2.0, n_refs=10 ** 6)
    assert p.nu_k == 1.0
    with mpmath.workdps(30):
        inv = 1 - mpmath.zeta(3 - 1.2, 10 ** 6) + mpmath.zeta(3 - 1.2, 1)
    assert normalization_c(p) == pytest.approx(float(1 / inv), rel=1e-9)


def test_normalization_full_params_independent():
    p = GZipfParams(q=1.7, r=1.3, mu=1.0, lam=1.0 + 1e-3 ** -0.4, n_refs=10 ** 6)
    tk = round(1 / p.nu_k)
    with mpmath.workdps(30):
        inv = (mpmath.fsum(mpmath.mpf(k) ** -(3 - p.q) for k in range(1, tk + 1))
               - mpmath.zeta(3 - p.r, p.n_refs) + mpmath.zeta(3 - p.r, tk))
    assert normalization_c(p) == pytest.approx(float(1 / inv), rel=1e-9)


def test_normalization_converges_in_n():
    cs = [normalization_c(BASE.replace(n_refs=n)) for n in (10 ** 6, 2 * 10 ** 6, 4 * 10 ** 6)]
    assert cs[0] >= cs[1] >= cs[2]
    assert abs(cs[1] - cs[0]) / cs[0] < 1e-3


# -- inter-reference laws ---------------------------------------------------------------------

def test_exact_head_plateau():
    p = GZipfParams.from_crossover(1.7, 1.3, 1e-6)
    for t in (1.0, 10.0, 100.0):
        ratio = inter_ref_exact_head(t, p) * t ** (3 - p.q)
        assert ratio == pytest.approx(math.gamma(3 - p.q), rel=0.01)


def test_exact_head_at_crossover():
    a = 3 - BASE.q
    expect = float(mpmath.gammainc(a, 1)) * BASE.nu_k ** a
    assert inter_ref_exact_head(BASE.t_k, BASE) == pytest.approx(expect, rel=1e-10)


def _head_integral(t, p, upper):
    # the frequency integral of nu^(2-q) e^(-nu t), written in x = nu t;
    # beyond x = 200 the integrand is below e^-200 and contributes nothing
    v, _ = integrate.quad(lambda x: x ** (2 - p.q) * math.exp(-x), p.nu_k * t,
                          min(upper * t, 200.0), limit=400, epsabs=0, epsrel=1e-12)
    return v * t ** (p.q - 3)


@pytest.mark.parametrize("t", [1.0, 3.0, 50.0, 1e3, 2e4])
def test_exact_head_is_the_frequency_integral(t):
    ref, _ = integrate.quad(lambda x: x ** (2 - BASE.q) * math.exp(-x), BASE.nu_k * t, np.inf,
                            epsabs=0, epsrel=1e-12)
    assert inter_ref_exact_head(t, BASE) == pytest.approx(ref * t ** (BASE.q - 3), rel=1e-8)


def test_exact_head_shape_with_frequencies_capped_at_one():
    ts = np.unique(np.round(np.geomspace(5, 1e5, 30)))
    cf = np.array([inter_ref_exact_head(t, BASE) for t in ts])
    qd = np.array([_head_integral(t, BASE, 1.0) for t in ts])
    a, b = cf / cf.sum(), qd / qd.sum()
    assert np.max(np.abs(a / b - 1)) < 0.05


def test_asymptotic_law_slopes_and_continuity():
    p = BASE
    f = lambda t: inter_ref_asymptotic(t, p)
    assert loglog_slope(f, 2.0, p.t_k / 2) == pytest.approx(-(3 - p.q), abs=1e-12)
    assert loglog_slope(f, p.t_k * 2, p.t_k * 50) == pytest.approx(-(3 - p.r), abs=1e-12)
    left = p.c_norm * p.t_k ** (p.q - 3)
    assert f(p.t_k) == pytest.approx(left, rel=1e-12)
    assert f(p.t_k * (1 - 1e-12)) == pytest.approx(f(p.t_k), rel=1e-10)


# -- miss rate versus size ----------------------------------------------------------------------

def test_head_and_tail_slopes():
    sx = crossover_size(BASE)
    f = lambda s: miss_rate_of_size(s, BASE)
    assert loglog_slope(f, sx / 100, sx / 2) == pytest.approx(1 - 1 / (BASE.q - 1), abs=1e-12)
    assert loglog_slope(f, sx * 2, sx * 100) == pytest.approx(1 - 1 / (BASE.r - 1), abs=1e-12)


def test_continuous_at_crossover():
    sx, mx = crossover_size(BASE), crossover_miss_rate(BASE)
    assert miss_rate_of_size(sx * (1 - 1e-12), BASE) == pytest.approx(mx, rel=1e-9)
    assert miss_rate_of_size(sx, BASE) == pytest.approx(mx, rel=1e-12)


def test_halving_factor_in_head():
    p = GZipfParams.from_crossover(1.7, 1.2, 1e-4)
    factor = 2 ** (1 / (1 / (p.q - 1) - 1))
    s = crossover_size(p) / 50
    assert miss_rate_of_size(s * factor, p) == pytest.approx(miss_rate_of_size(s, p) / 2,
                                                             rel=1e-12)


def test_working_set_chain_reproduces_head_law():
    # push the crossover far out so the head law covers the integration range
    p = GZipfParams.from_crossover(1.7, 1.3, 1e-9, 10 ** 10)
    f = lambda x: inter_ref_asymptotic(x, p)

    def m_num(t):
        v, _ = integrate.quad(lambda u: f(math.exp(u)) * math.exp(u), math.log(t),
                              math.log(p.t_k), epsabs=0, epsrel=1e-12, limit=400)
        w, _ = integrate.quad(lambda u: f(math.exp(u)) * math.exp(u), math.log(p.t_k),
                              math.log(p.t_k) + 60, epsabs=0, epsrel=1e-12, limit=400)
        return v + w

    for t in (10.0, 30.0, 100.0):
        s_num, _ = integrate.quad(m_num, 0, t, epsabs=0, epsrel=1e-9, limit=200)
        assert miss_rate_of_size(s_num, p) == pytest.approx(m_num(t), rel=0.01)


def test_clamped_below_validity_floor():
    with pytest.warns(RuntimeWarning, match="clamped"):
        m = miss_rate_of_size(1e-6, BASE)
    assert m == 1.0


def test_size_must_be_positive():
    with pytest.raises(DataError):
        miss_rate_of_size(0.0, BASE)


@settings(max_examples=300, deadline=None)
@given(params, st.floats(0.0, 1.0))
def test_inverse_round_trip(p, u):
    mx = crossover_miss_rate(p)
    # both branches, sampled in log space
    lo, hi = math.log(mx * 1e-3), math.log(0.999)
    m = math.exp(lo + u * (hi - lo))
    assert miss_rate_of_size(size_of_miss_rate(m, p), p) == pytest.approx(m, rel=1e-6)


@pytest.mark.parametrize("branch", ["head", "tail"])
def test_inverse_each_branch(branch):
    mx = crossover_miss_rate(BASE)
    ms = np.geomspace(mx * 1.01, 0.9, 20) if branch == "head" else np.geomspace(mx * 1e-3, mx * 0.99, 20)
    s = size_of_miss_rate(ms, BASE)
    assert np.allclose(miss_rate_of_size(s, BASE), ms, rtol=1e-6, atol=0)
    assert np.all((s < crossover_size(BASE)) if branch == "head" else (s > crossover_size(BASE)))


def test_inverse_decreasing():
    ms = np.geomspace(1e-5, 0.99, 200)
    assert np.all(np.diff(size_of_miss_rate(ms, BASE)) < 0)


def test_inverse_independent_of_n():
    for m in (0.3, 0.05, 0.005):
        a = size_of_miss_rate(m, BASE)
        b = size_of_miss_rate(m, BASE.replace(n_refs=2 * BASE.n_refs))
        assert abs(b - a) / a < 1e-3


def test_inverse_depends_on_popularity():
    m = 0.05
    a = size_of_miss_rate(m, BASE)
    assert abs(size_of_miss_rate(m, GZipfParams.from_crossover(1.8, 1.3, 1e-3)) - a) / a > 0.01
    assert abs(size_of_miss_rate(m, GZipfParams.from_crossover(1.7, 1.3, 1e-2)) - a) / a > 0.01


@pytest.mark.parametrize("m", [0.0, 1.0, -0.2])
def test_inverse_domain(m):
    with pytest.raises(DataError):
        size_of_miss_rate(m, BASE)


# -- q = 2 ------------------------------------------------------------------------------------------

def test_q2_limits():
    c = 0.3
    assert size_of_miss_rate_q2(1e-12, c) == pytest.approx(c, rel=1e-9)
    assert size_of_miss_rate_q2(c, c) == pytest.approx(2 * c / math.e, rel=1e-15)


def test_q2_is_the_limit_of_the_anchored_chain():
    c = 0.35
    for m in np.geomspace(0.01, 0.5, 12):
        lim = size_of_miss_rate_q2(m, c)
        assert size_of_miss_rate_anchored(m, 2 - 1e-4, c) == pytest.approx(lim, rel=0.01)


def test_pure_power_law_inverse_has_no_q2_limit():
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4):
        p = GZipfParams.from_crossover(2 - eps, 1.3, 1e-3)
        ratios.append(size_of_miss_rate(0.1, p) / size_of_miss_rate_q2(0.1, p.c_norm))
    assert ratios[0] > 1e3
    assert ratios[0] < ratios[1] < ratios[2]


def test_q2_rejects_bad_inputs():
    with pytest.raises(DataError):
        size_of_miss_rate_q2(0.1, 0.0)
    with pytest.raises(DataError):
        size_of_miss_rate_q2(1.5, 0.3)


# -- sensitivity -----------------------------------------------------------------------------------

def test_sensitivity_offset_mode():
    base = GZipfParams.from_crossover(1.5, 1.47, 1e-3)
    grid = np.linspace(1.04, 1.96, 24)
    s = np.array([v for _, v in sensitivity_curve(0.1, grid, base)])
    assert np.all(np.diff(s) > 0)
    # superlinear in log-log near 2
    assert np.all(np.diff(np.log(s), 2)[-5:] > 0)


def test_sensitivity_plateau_near_one():
    base = GZipfParams.from_crossover(1.5, 1.497, 1e-3)
    s = [v for _, v in sensitivity_curve(0.1, [1.004, 1.01, 1.02], base)]
    assert s[0] < 1.2
    assert (s[1] - s[0]) / s[0] < 0.02


def test_sensitivity_pinned_r_increasing():
    base = GZipfParams.from_crossover(1.5, 1.2, 1e-3)
    s = [v for _, v in sensitivity_curve(0.1, np.linspace(1.3, 1.95, 10), base, pin_r=True)]
    assert np.all(np.diff(s) > 0)


def test_sensitivity_rejects_grid_outside_domain():
    with pytest.raises(DataError):
        sensitivity_curve(0.1, [2.0], BASE)


# -- three regimes ----------------------------------------------------------------------------------

P3 = ThreeRegionParams((1.7, 1.3, 1.25), (1e-3, 1e-5), 10 ** 7)


def test_three_region_slopes():
    (s1, _), (s2, _), _ = three_region_boundaries(P3)
    sizes = np.array([s1 / 30, s1 / 3, s1 * 1.5, s2 / 1.5, s2 * 1.5, s2 * 30])
    m = three_region_miss_curve(P3, sizes).miss_rates
    slopes = np.diff(np.log(m))[::2] / np.diff(np.log(sizes))[::2]
    expect = [1 - 1 / (a - 1) for a in P3.alphas]
    assert slopes == pytest.approx(expect, abs=1e-12)


def test_three_region_continuity():
    (s1, m1), (s2, m2), _ = three_region_boundaries(P3)
    below = three_region_miss_curve(P3, [s1 * (1 - 1e-12), s2 * (1 - 1e-12)]).miss_rates
    at = three_region_miss_curve(P3, [s1, s2]).miss_rates
    assert below == pytest.approx(at, rel=1e-9)
    assert at == pytest.approx([m1, m2], rel=1e-12)


def test_three_region_equal_exponents_collapse():
    a = 1.6
    n = 10 ** 6
    p3 = ThreeRegionParams((a, a, a), (1e-2, 1e-4), n)
    sizes = np.geomspace(1, 1e5, 30)
    m = three_region_miss_curve(p3, sizes).miss_rates
    # single-regime law normalized over distances 1..N-1
    with mpmath.workdps(25):
        c = float(1 / (mpmath.zeta(3 - a, 1) - mpmath.zeta(3 - a, n)))
    head = (c ** (1 / (a - 1)) * (2 - a) ** (-1 / (a - 1)) * (a - 1) ** ((a - 2) / (a - 1))
            * sizes ** ((a - 2) / (a - 1)))
    assert m == pytest.approx(np.minimum(head, 1.0), rel=1e-9)


def test_three_region_floor():
    p = ThreeRegionParams(P3.alphas, P3.crossover_freqs, P3.n_refs, n_objects=5000)
    # start above the clamp so the floor composition is visible everywhere
    sizes = np.geomspace(10, 1e6, 10)
    bare = three_region_miss_curve(P3, sizes).miss_rates
    floored = three_region_miss_curve(p, sizes).miss_rates
    f = 5000 / P3.n_refs
    assert floored == pytest.approx(f + (1 - f) * bare, rel=1e-12)


def test_three_region_explicit_boundaries():
    curve = three_region_miss_curve(P3, [10.0, 100.0, 1000.0, 1e4], boundaries=(50.0, 500.0))
    (s1, _), (s2, _), _ = three_region_boundaries(P3, (50.0, 500.0))
    assert (s1, s2) == (50.0, 500.0)
    assert np.all(np.diff(curve.miss_rates) < 0)
    with pytest.raises(DataError, match="inconsistent"):
        three_region_miss_curve(P3, [10.0], boundaries=(500.0, 50.0))


def test_three_region_param_invariants():
    with pytest.raises(DataError):
        ThreeRegionParams((1.7, 1.3), (1e-3, 1e-5), 10 ** 6)
    with pytest.raises(DataError):
        ThreeRegionParams((1.7, 1.3, 0.9), (1e-3, 1e-5), 10 ** 6)
    with pytest.raises(DataError):
        ThreeRegionParams((1.7, 1.3, 1.2), (1e-5, 1e-3), 10 ** 6)
    d = P3.to_dict()
    assert ThreeRegionParams.from_dict(d) == P3


# -- curves -----------------------------------------------------------------------------------------

def test_curve_size_at_interpolates_in_log_space():
    c = MissRateCurve([10, 100], [0.1, 0.01])
    assert c.size_at(math.sqrt(0.1 * 0.01)) == pytest.approx(math.sqrt(10 * 100), rel=1e-12)
    assert c.size_at(0.1) == 10
    with pytest.raises(DataError):
        c.size_at(0.001)
