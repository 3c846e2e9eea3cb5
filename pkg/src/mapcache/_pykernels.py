"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built, or when ``MAPCACHE_PURE_PYTHON=1``.
Results are identical to the compiled versions; only speed differs.
"""
from collections import OrderedDict

import numpy as np


def stack_distances(refs, n_objects):
    n = len(refs)
    out = [0] * n
    tree = [0] * (n + 1)
    last = [0] * n_objects
    for i, obj in enumerate(refs.tolist()):
        prev = last[obj]
        if prev:
            s = 0
            j = i
            while j > 0:
                s += tree[j]
                j -= j & -j
            j = prev
            while j > 0:
                s -= tree[j]
                j -= j & -j
            out[i] = s + 1
            j = prev
            while j <= n:
                tree[j] -= 1
                j += j & -j
        j = i + 1
        while j <= n:
            tree[j] += 1
            j += j & -j
        last[obj] = i + 1
    return np.asarray(out, dtype=np.int64)


def lru_misses(refs, n_objects, size):
    cache = OrderedDict()
    misses = 0
    for obj in refs.tolist():
        if obj in cache:
            cache.move_to_end(obj)
        else:
            misses += 1
            if len(cache) == size:
                cache.popitem(last=False)
            cache[obj] = None
    return misses


def trie_lookup(left, right, value, addrs):
    left = left.tolist()
    right = right.tolist()
    value = value.tolist()
    out = []
    for a in addrs.tolist():
        node = 0
        best = value[0]
        for bit in range(31, -1, -1):
            node = right[node] if (a >> bit) & 1 else left[node]
            if node < 0:
                break
            if value[node] >= 0:
                best = value[node]
        out.append(best)
    return np.asarray(out, dtype=np.int32)
