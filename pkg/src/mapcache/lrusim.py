"""Empirical LRU evaluation.

Two routes to the same numbers: a fixed-size simulation per cache size,
and one pass of stack-distance analysis that yields the miss rate at every
size at once (a reference hits a cache of ``s`` entries iff its stack
distance is at most ``s``).
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError
from .model import MissRateCurve


@dataclass(frozen=True)
class CacheStats:
    size: int
    hits: int
    misses: int

    @property
    def miss_rate(self):
        return self.misses / (self.hits + self.misses)


@dataclass(frozen=True, eq=False)
class StackDistanceHistogram:
    """``bins[d]`` counts reuses at stack distance ``d`` (``bins[0]`` is unused)."""

    bins: np.ndarray
    cold_misses: int
    total_refs: int

    @property
    def max_distance(self):
        return self.bins.shape[0] - 1

    def items(self):
        nz = np.flatnonzero(self.bins)
        return list(zip(nz.tolist(), self.bins[nz].tolist()))

    def misses_at(self, sizes):
        """Miss counts for each cache size (tail sums of ``bins``)."""
        sizes = np.asarray(sizes, dtype=np.int64)
        tail = np.cumsum(self.bins[::-1])[::-1]
        # above[s] = reuses with distance > s
        above = np.append(tail[1:], 0)
        return self.cold_misses + above[np.minimum(sizes, self.max_distance)]


def stack_distance_histogram(rs, warmup=0):
    """Histogram of LRU stack distances.

    ``warmup`` references at the start still update the stack but are not
    counted.
    """
    if rs.n_refs == 0:
        raise DataError("empty reference string")
    if not 0 <= warmup < rs.n_refs:
        raise DataError("warmup must leave at least one counted reference")
    d = kernels.stack_distances(rs.refs, rs.n_objects)[warmup:]
    bins = np.bincount(d, minlength=2).astype(np.int64)
    cold = int(bins[0])
    bins[0] = 0
    return StackDistanceHistogram(bins, cold, int(d.shape[0]))


def miss_rate_curve(h, sizes):
    """Empirical miss-rate curve at the requested (ascending) sizes."""
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.size == 0:
        raise DataError("no cache sizes given")
    if np.any(sizes <= 0):
        raise DataError("cache size must be positive")
    if np.any(np.diff(sizes) < 0):
        raise DataError("sizes must be sorted ascending")
    rates = h.misses_at(sizes) / h.total_refs
    return MissRateCurve(sizes, rates, "empirical")


def simulate_lru_fixed(rs, size, warmup=0):
    """Exact hit/miss counts of an initially empty LRU cache of ``size`` entries."""
    if size < 1:
        raise DataError("cache size must be >= 1")
    if not 0 <= warmup < rs.n_refs:
        raise DataError("warmup must leave at least one counted reference")
    misses = kernels.lru_misses(rs.refs, rs.n_objects, size)
    if warmup:
        misses -= kernels.lru_misses(rs.refs[:warmup], rs.n_objects, size)
    counted = rs.n_refs - warmup
    return CacheStats(int(size), counted - misses, misses)


def log_sizes(lo, hi, steps):
    """Distinct integer sizes, log-spaced from ``lo`` to ``hi``."""
    if not 1 <= lo <= hi or steps < 1:
        raise DataError("need 1 <= lo <= hi and steps >= 1")
    return np.unique(np.round(np.geomspace(lo, hi, steps)).astype(np.int64))
