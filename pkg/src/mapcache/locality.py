"""Locality statistics of reference strings.

Popularity (rank-frequency), inter-reference distances and working-set
curves. Distances and windows are measured in references, not seconds.
"""
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DataError
from .prefixdb import Prefix


def prev_next_positions(refs):
    """Previous and next position of the same object for every reference.

    Missing neighbours are -1 (previous) and ``len(refs)`` (next).
    """
    refs = np.asarray(refs)
    n = refs.shape[0]
    order = np.argsort(refs, kind="stable")
    srt = refs[order]
    same = srt[1:] == srt[:-1]
    prev = np.full(n, -1, dtype=np.int64)
    nxt = np.full(n, n, dtype=np.int64)
    prev[order[1:][same]] = order[:-1][same]
    nxt[order[:-1][same]] = order[1:][same]
    return prev, nxt


def backward_distances(refs):
    """Distance to the previous reference of the same object (0 if none)."""
    prev, _ = prev_next_positions(refs)
    pos = np.arange(prev.shape[0])
    return np.where(prev >= 0, pos - prev, 0)


# -- popularity -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RankFrequencyTable:
    """Objects by descending reference count; rank ``k`` is row ``k - 1``."""

    objects: np.ndarray
    counts: np.ndarray
    tokens: tuple
    total_refs: int

    def __len__(self):
        return self.counts.shape[0]

    @property
    def ranks(self):
        return np.arange(1, self.counts.shape[0] + 1)

    @property
    def frequencies(self):
        return self.counts / self.total_refs

    def entries(self):
        """Yield ``(rank, object, count, normalized_frequency)``."""
        for k, (o, c) in enumerate(zip(self.objects.tolist(), self.counts.tolist()), 1):
            yield k, o, c, c / self.total_refs

    def rows(self):
        return [(k, c, f) for k, _, c, f in self.entries()]


def rank_frequency(rs):
    """Rank objects by count; ties go to the object seen first."""
    if rs.n_refs == 0:
        raise DataError("empty reference string")
    counts = np.bincount(rs.refs, minlength=rs.n_objects)
    first = np.full(rs.n_objects, rs.n_refs, dtype=np.int64)
    np.minimum.at(first, rs.refs, np.arange(rs.n_refs))
    order = np.lexsort((first, -counts))
    order = order[counts[order] > 0]
    tokens = tuple(rs.symbol_table[i] for i in order.tolist())
    return RankFrequencyTable(order, counts[order], tokens, rs.n_refs)


# -- inter-reference distances -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class IrHistogram:
    """Sparse histogram of inter-reference distances."""

    distances: np.ndarray
    counts: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    def as_dict(self):
        return dict(zip(self.distances.tolist(), self.counts.tolist()))

    def rows(self):
        return list(zip(self.distances.tolist(), self.counts.tolist()))

    def log_binned(self, base=1.25):
        """Density per unit distance in geometric bins.

        Returns ``(centers, density)`` for non-empty bins; ``density`` is the
        bin count divided by the number of integer distances it spans.
        """
        if self.distances.size == 0:
            return np.zeros(0), np.zeros(0)
        tmax = int(self.distances.max())
        edges = [1]
        while edges[-1] <= tmax:
            edges.append(max(edges[-1] + 1, int(np.floor(edges[-1] * base))))
        edges = np.asarray(edges)
        which = np.searchsorted(edges, self.distances, side="right") - 1
        sums = np.bincount(which, weights=self.counts, minlength=edges.size - 1)
        width = np.diff(edges)
        centers = np.sqrt(edges[:-1] * (edges[1:] - 1.0))
        keep = sums > 0
        return centers[keep], sums[keep] / width[keep]


def inter_reference_histogram(rs):
    """Histogram over distances ``t >= 1`` between successive references to an object."""
    if rs.n_refs == 0:
        raise DataError("empty reference string")
    d = backward_distances(rs.refs)
    counts = np.bincount(d[d > 0])
    t = np.flatnonzero(counts)
    return IrHistogram(t, counts[t])


# -- working sets --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WorkingSetCurve:
    windows: np.ndarray
    avg_sizes: np.ndarray
    miss_rates: np.ndarray

    def rows(self):
        return list(zip(self.windows.tolist(), self.avg_sizes.tolist(), self.miss_rates.tolist()))


def working_set_curve(rs, windows):
    """Average working-set size and miss rate for each window ``T``.

    ``s(T)`` averages the distinct-object count over the complete windows
    ending at positions ``T..N``. ``m(T)`` is the fraction of references
    whose previous reference to the same object lies more than ``T``
    references back; first references always miss.
    """
    n = rs.n_refs
    if n == 0:
        raise DataError("empty reference string")
    windows = np.asarray(windows, dtype=np.int64)
    if np.any(windows < 1):
        raise DataError("window must be >= 1")
    if np.any(windows > n):
        raise DataError(f"window larger than the trace ({n} references)")
    prev, nxt = prev_next_positions(rs.refs)
    pos = np.arange(n)
    back = np.sort(np.where(prev >= 0, pos - prev, n + 1))
    # 1-based positions; a reference at i is the newest of its object in the
    # windows ending at t in [i, next_i - 1]
    i1 = pos + 1
    last_t = np.minimum(nxt, n)
    sizes, rates = [], []
    for T in windows.tolist():
        lo = np.maximum(i1, T)
        hi = np.minimum(i1 + T - 1, last_t)
        total = np.clip(hi - lo + 1, 0, None).sum()
        sizes.append(total / (n - T + 1))
        misses = n - np.searchsorted(back, T, side="right")
        rates.append(misses / n)
    return WorkingSetCurve(windows, np.asarray(sizes), np.asarray(rates))


# -- prefix length versus popularity ---------------------------------------------------

def spearman(x, y):
    """Spearman rank correlation with average ranks for ties; 0 if either side is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise DataError("need two equally long samples of size >= 2")
    rx, ry = stats.rankdata(x), stats.rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    den = np.sqrt((rx * rx).sum() * (ry * ry).sum())
    if den == 0:
        return 0.0
    return float((rx * ry).sum() / den)


def length_frequency_correlation(rft, table):
    """Spearman correlation between prefix length and reference count."""
    lengths = []
    for tok in rft.tokens:
        try:
            p = Prefix.parse(tok)
        except DataError:
            raise DataError(f"object {tok!r} is not a CIDR prefix") from None
        if p not in table:
            raise DataError(f"prefix {tok} not in routing table")
        lengths.append(p.length)
    return spearman(lengths, rft.counts)
