"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set ``MAPCACHE_PURE_PYTHON=1`` in the environment to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

_compiled = None
if os.environ.get("MAPCACHE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels


def _u32(a):
    return np.ascontiguousarray(a, dtype=np.uint32)


def _i32(a):
    return np.ascontiguousarray(a, dtype=np.int32)


def stack_distances(refs, n_objects):
    """Per-reference LRU stack distance, 0 for first references."""
    return _impl.stack_distances(_u32(refs), int(n_objects))


def lru_misses(refs, n_objects, size):
    """Misses of an initially empty LRU cache of ``size`` entries."""
    if size < 1:
        raise ValueError("cache size must be >= 1")
    return int(_impl.lru_misses(_u32(refs), int(n_objects), int(size)))


def trie_lookup(left, right, value, addrs):
    """Batch longest-prefix match over a flattened binary trie."""
    return _impl.trie_lookup(_i32(left), _i32(right), _i32(value), _u32(addrs))
