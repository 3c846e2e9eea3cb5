"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--refs N] [--objects D] [--repeat K]

Both backends run on the same inputs and their outputs are checked for
equality before any timing is reported.
"""
import argparse
import sys
import time

import numpy as np

from mapcache import _pykernels, kernels
from mapcache.prefixdb import Prefix, PrefixTable
from mapcache.synth import RankLaw, synthesize

try:
    from mapcache import _kernels
except ImportError:
    _kernels = None


def best_of(repeat, fn, *args):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def random_trie(rng, n):
    lengths = rng.integers(8, 29, size=n)
    nets = rng.integers(0, 2 ** 32, size=n, dtype=np.int64) & ~((1 << (32 - lengths)) - 1)
    table = PrefixTable(Prefix(int(a) & 0xFFFFFFFF, int(b)) for a, b in zip(nets, lengths))
    return table._left, table._right, table._value


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--refs", type=int, default=200_000)
    ap.add_argument("--objects", type=int, default=10_000)
    ap.add_argument("--cache-size", type=int, default=300)
    ap.add_argument("--prefixes", type=int, default=20_000)
    ap.add_argument("--lookups", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1

    rng = np.random.default_rng(0)
    rs = synthesize(RankLaw.from_gzipf(1.7, 1.3, args.objects, max(1, args.objects // 30)),
                    args.refs, seed=1)
    refs = np.ascontiguousarray(rs.refs, dtype=np.uint32)
    left, right, value = (np.ascontiguousarray(a, dtype=np.int32) for a in random_trie(rng, args.prefixes))
    addrs = rng.integers(0, 2 ** 32, size=args.lookups, dtype=np.uint64).astype(np.uint32)

    cases = [
        ("stack_distances", (refs, rs.n_objects), f"{args.refs} refs"),
        ("lru_misses", (refs, rs.n_objects, args.cache_size), f"{args.refs} refs, size {args.cache_size}"),
        ("trie_lookup", (left, right, value, addrs), f"{args.lookups} lookups"),
    ]
    print(f"{'kernel':<16} {'workload':<26} {'compiled s':>11} {'python s':>10} {'speedup':>8}")
    for name, inputs, workload in cases:
        tc, oc = best_of(args.repeat, getattr(_kernels, name), *inputs)
        tp, op = best_of(args.repeat, getattr(_pykernels, name), *inputs)
        if not np.array_equal(np.asarray(oc), np.asarray(op)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 2
        print(f"{name:<16} {workload:<26} {tc:>11.4f} {tp:>10.4f} {tp / tc:>7.1f}x")
    print(f"dispatch backend in use: {kernels.BACKEND}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
