"""Piecewise power-law fits by least squares in log10-log10 space.

Breakpoints are searched exhaustively over a log-spaced candidate grid;
segment fits use prefix sums so each candidate costs O(1).
"""
from dataclasses import dataclass
import itertools
import json
import math
import warnings

import numpy as np

from .errors import DataError

GRID_SIZE = 50
MIN_POINTS = 3


@dataclass(frozen=True)
class Segment:
    x_lo: float
    x_hi: float
    slope: float
    intercept: float
    sse: float
    n_points: int

    def predict(self, x):
        """Fitted ``y`` at ``x`` (linear units)."""
        return 10.0 ** (self.intercept + self.slope * np.log10(x))


@dataclass(frozen=True)
class PiecewiseFit:
    segments: tuple
    breakpoints: tuple

    @property
    def slopes(self):
        return tuple(s.slope for s in self.segments)

    @property
    def sse(self):
        return sum(s.sse for s in self.segments)

    def to_dict(self):
        return {
            "segments": [
                {"x_lo": s.x_lo, "x_hi": s.x_hi, "slope": s.slope,
                 "intercept": s.intercept, "sse": s.sse, "n_points": s.n_points}
                for s in self.segments
            ],
            "breakpoints": list(self.breakpoints),
            "sse": self.sse,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d):
        segs = tuple(Segment(**s) for s in d["segments"])
        return cls(segs, tuple(d["breakpoints"]))


@dataclass(frozen=True)
class PopularityExponents:
    alphas: tuple
    crossover_freqs: tuple


def _log_points(points, x_range=None):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DataError("points must be a sequence of (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    if x_range is not None:
        lo, hi = x_range
        keep = (x >= lo) & (x <= hi)
        x, y = x[keep], y[keep]
    if np.any(x <= 0) or np.any(y <= 0):
        raise DataError("log-log fit needs positive x and y")
    if x.size < MIN_POINTS:
        raise DataError(f"need at least {MIN_POINTS} points, got {x.size}")
    return np.log10(x), np.log10(y)


def _raw_x(points, x_range):
    x = np.asarray(points, dtype=np.float64)[:, 0]
    if x_range is not None:
        x = x[(x >= x_range[0]) & (x <= x_range[1])]
    return x


def _ols(lx, ly):
    n = lx.size
    mx, my = lx.mean(), ly.mean()
    dx, dy = lx - mx, ly - my
    sxx = float((dx * dx).sum())
    if sxx == 0:
        raise DataError("all x values equal")
    slope = float((dx * dy).sum()) / sxx
    intercept = my - slope * mx
    resid = ly - (intercept + slope * lx)
    return slope, float(intercept), float((resid * resid).sum()), n


def fit_loglog_segment(points, x_range=None):
    """Ordinary least squares of ``log10 y`` on ``log10 x``.

    Returns
    -------
    (slope, intercept, sse)
        ``intercept`` is ``log10 y`` at ``x = 1``; ``sse`` is in log space.
    """
    slope, intercept, sse, _ = _ols(*_log_points(points, x_range))
    return slope, intercept, sse


class _PrefixOLS:
    """O(1) least-squares fits over index ranges ``[i, j)``."""

    def __init__(self, lx, ly):
        z = lambda a: np.concatenate([[0.0], np.cumsum(a)])
        self.sx, self.sy = z(lx), z(ly)
        self.sxx, self.sxy, self.syy = z(lx * lx), z(lx * ly), z(ly * ly)

    def sse(self, i, j):
        n = j - i
        sx = self.sx[j] - self.sx[i]
        sy = self.sy[j] - self.sy[i]
        vxx = self.sxx[j] - self.sxx[i] - sx * sx / n
        vxy = self.sxy[j] - self.sxy[i] - sx * sy / n
        vyy = self.syy[j] - self.syy[i] - sy * sy / n
        if vxx <= 0:
            return math.inf
        return max(vyy - vxy * vxy / vxx, 0.0)


def _candidate_indices(lx, grid_size):
    """Split indices (first point of the right segment) on a log grid."""
    grid = np.linspace(lx[0], lx[-1], grid_size + 2)[1:-1]
    return np.unique(np.searchsorted(lx, grid, side="left"))


def fit_piecewise(points, n_segments=2, candidate_breaks=None, x_range=None,
                  grid_size=GRID_SIZE):
    """Fit ``n_segments`` (2 or 3) independent power laws to contiguous x ranges.

    Breakpoints are taken from ``candidate_breaks`` (x values) or from a
    log-spaced grid of ``grid_size`` candidates, choosing the combination
    with the least total squared error; ties keep the smallest breakpoints.
    A point at a breakpoint belongs to the segment on its right.
    """
    if n_segments not in (2, 3):
        raise DataError("n_segments must be 2 or 3")
    lx, ly = _log_points(points, x_range)
    order = np.argsort(lx, kind="stable")
    lx, ly = lx[order], ly[order]
    x = _raw_x(points, x_range)[order]
    n = lx.size
    if n < MIN_POINTS * n_segments:
        raise DataError(f"{n} points cannot hold {n_segments} segments of {MIN_POINTS}")
    if candidate_breaks is None:
        cands = _candidate_indices(lx, grid_size)
    else:
        cands = np.unique(np.searchsorted(lx, np.log10(np.asarray(candidate_breaks, float)),
                                          side="left"))
    cands = [int(c) for c in cands if MIN_POINTS <= c <= n - MIN_POINTS]
    ps = _PrefixOLS(lx, ly)
    best = None
    for cut in itertools.combinations(cands, n_segments - 1):
        bounds = (0,) + cut + (n,)
        if any(b - a < MIN_POINTS for a, b in zip(bounds, bounds[1:])):
            continue
        total = sum(ps.sse(a, b) for a, b in zip(bounds, bounds[1:]))
        if best is None or total < best[0]:
            best = (total, bounds)
    if best is None:
        raise DataError("no admissible breakpoints: too few points per segment")
    bounds = best[1]
    segs = []
    for a, b in zip(bounds, bounds[1:]):
        slope, intercept, sse, k = _ols(lx[a:b], ly[a:b])
        segs.append(Segment(float(x[a]), float(x[b - 1]), slope, intercept, sse, k))
    breaks = tuple(float(x[b]) for b in bounds[1:-1])
    return PiecewiseFit(tuple(segs), breaks)


def single_fit(points, x_range=None):
    """One segment over the whole range, as a :class:`PiecewiseFit`."""
    lx, ly = _log_points(points, x_range)
    slope, intercept, sse, k = _ols(lx, ly)
    x = _raw_x(points, x_range)
    seg = Segment(float(x.min()), float(x.max()), slope, intercept, sse, k)
    return PiecewiseFit((seg,), ())


def popularity_exponents(fit, n_refs=1):
    """GZipf exponents ``alpha_i = 1 + 1/|s_i|`` from a rank-frequency fit.

    Crossover frequencies are the fitted counts at each breakpoint
    (geometric mean of the two adjoining segments) divided by ``n_refs``;
    pass ``n_refs=1`` when the fit is already on normalized frequencies.
    """
    alphas = []
    for s in fit.segments:
        if s.slope >= 0:
            raise DataError(f"slope {s.slope:.4g} is not a decaying power law")
        alphas.append(1 + 1 / abs(s.slope))
    freqs = []
    for b, left, right in zip(fit.breakpoints, fit.segments, fit.segments[1:]):
        y = math.sqrt(float(left.predict(b)) * float(right.predict(b)))
        freqs.append(y / n_refs)
    return PopularityExponents(tuple(alphas), tuple(freqs))


def missrate_slope_from_alpha(alpha):
    """Log-log slope of the miss rate in a regime with GZipf exponent ``alpha``.

    Slopes are positive (outside the model's decaying domain) for
    ``alpha > 2``; ``alpha == 2`` is the logarithmic case, slope 0.
    """
    if alpha <= 1:
        raise DataError(f"exponent must exceed 1, got {alpha}")
    if alpha > 2:
        warnings.warn(f"exponent {alpha} > 2 gives a miss rate growing with cache size; "
                      "outside the model domain", RuntimeWarning, stacklevel=2)
    return 1 - 1 / (alpha - 1)


def alpha_from_missrate_slope(slope):
    """Inverse of :func:`missrate_slope_from_alpha`: ``alpha = 1 + 1/(1 - slope)``."""
    if slope >= 1:
        raise DataError(f"miss-rate slope must be below 1, got {slope}")
    return 1 + 1 / (1 - slope)


def fit_rank_frequency(rft, n_segments=3, min_count=1, x_range=None, grid_size=GRID_SIZE):
    """Piecewise fit of counts against rank, with exponents read off the slopes.

    Parameters
    ----------
    rft : RankFrequencyTable
        Anything with ``ranks``, ``counts`` and ``total_refs``.
    min_count : int
        Ranks whose count is below this are left out; the sparse tail of
        a finite sample otherwise flattens the last segment.
    x_range : (float, float), optional
        Rank interval to fit.

    Returns
    -------
    (PiecewiseFit, PopularityExponents)
    """
    counts = np.asarray(rft.counts)
    keep = counts >= min_count
    pts = np.column_stack([np.asarray(rft.ranks)[keep], counts[keep]])
    if n_segments == 1:
        fit = single_fit(pts, x_range)
    else:
        fit = fit_piecewise(pts, n_segments, x_range=x_range, grid_size=grid_size)
    return fit, popularity_exponents(fit, rft.total_refs)


def fit_miss_rate_curve(curve, n_segments=3, x_range=None, grid_size=GRID_SIZE):
    """Piecewise fit of a miss-rate curve; exponents from ``s_i = 1 - 1/(alpha_i - 1)``.

    Returns
    -------
    (PiecewiseFit, tuple of float)
    """
    pts = np.column_stack([curve.sizes, curve.miss_rates])
    pts = pts[pts[:, 1] > 0]
    if n_segments == 1:
        fit = single_fit(pts, x_range)
    else:
        fit = fit_piecewise(pts, n_segments, x_range=x_range, grid_size=grid_size)
    return fit, tuple(alpha_from_missrate_slope(s) for s in fit.slopes)
