"""Independent Reference Model (IRM) trace synthesis and shuffling.

Random numbers come from NumPy's PCG64 bit generator seeded with the
caller's 64-bit seed; draws use inverse-CDF lookup so a given
``(probabilities, n, seed)`` always yields the same ids on any platform.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import DataError
from .refstring import ReferenceString

SEED_MAX = 2 ** 64 - 1


def _rng(seed):
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise DataError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class RankLaw:
    """Two-regime rank popularity ``k^-head_exponent`` then ``k^-tail_exponent``.

    A frequency-domain GZipf exponent ``a`` corresponds to a rank exponent
    ``1 / (a - 1)``; see :meth:`from_gzipf`.
    """

    d_objects: int
    head_exponent: float
    tail_exponent: float
    crossover_rank: int

    def __post_init__(self):
        if self.d_objects < 2:
            raise DataError("need at least two objects")
        if not 1 <= self.crossover_rank <= self.d_objects:
            raise DataError(f"crossover rank {self.crossover_rank} outside [1, {self.d_objects}]")
        if self.head_exponent < 0 or self.tail_exponent < self.head_exponent:
            raise DataError("need 0 <= head_exponent <= tail_exponent")

    @classmethod
    def from_gzipf(cls, q, r, d_objects, crossover_rank):
        if not 1 < r <= q:
            raise DataError(f"need 1 < r <= q, got q={q}, r={r}")
        return cls(d_objects, 1 / (q - 1), 1 / (r - 1), crossover_rank)

    @classmethod
    def uniform(cls, d_objects):
        return cls(d_objects, 0.0, 0.0, d_objects)

    def weight(self, k):
        """Unnormalized popularity of rank ``k`` (array-friendly)."""
        k = np.asarray(k, dtype=np.float64)
        kc = float(self.crossover_rank)
        return np.where(k <= kc, k ** -self.head_exponent,
                        self.tail_weight(k))

    def tail_weight(self, k):
        kc = float(self.crossover_rank)
        return kc ** -self.head_exponent * (np.asarray(k, dtype=np.float64) / kc) ** -self.tail_exponent


def rank_probabilities(law):
    """Probability of each rank ``1..D``; sums to one, last entry absorbs rounding."""
    if law.d_objects < 2:
        raise DataError("need at least two objects")
    w = law.weight(np.arange(1, law.d_objects + 1))
    p = w / math.fsum(w)
    p[-1] = 1.0 - math.fsum(p[:-1])
    return p


def generate_irm(probs, n, seed):
    """Draw ``n`` i.i.d. references from ``probs``.

    Object tokens are the 1-based ranks; ids are interned in first-seen
    order like any other trace.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size == 0 or np.any(probs < 0):
        raise DataError("probabilities must be a non-empty non-negative vector")
    if abs(math.fsum(probs) - 1.0) > 1e-9:
        raise DataError("probabilities must sum to 1")
    if n < 1:
        raise DataError("n must be >= 1")
    rng = _rng(seed)
    cdf = np.cumsum(probs)
    idx = np.empty(n, dtype=np.int64)
    chunk = 1 << 20
    for lo in range(0, n, chunk):
        u = rng.random(min(chunk, n - lo))
        idx[lo:lo + u.size] = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, probs.size - 1, out=idx)
    names = [str(k) for k in range(1, probs.size + 1)]
    return ReferenceString.from_ids(idx, symbols=names)


def irm_shuffle(rs, seed):
    """Uniformly permute a reference string (Fisher-Yates); popularity is untouched."""
    if rs.n_refs == 0:
        raise DataError("cannot shuffle an empty reference string")
    refs = _rng(seed).permutation(rs.refs)
    return ReferenceString(refs, rs.symbol_table)


def synthesize(law, n, seed):
    """Convenience: :func:`generate_irm` over :func:`rank_probabilities`."""
    return generate_irm(rank_probabilities(law), n, seed)
