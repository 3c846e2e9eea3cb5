# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every function here has a pure-Python twin in :mod:`mapcache._pykernels`
with the same signature and bit-identical results.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def stack_distances(const unsigned int[::1] refs, Py_ssize_t n_objects):
    """LRU stack distance of every reference (0 marks a first reference)."""
    cdef Py_ssize_t n = refs.shape[0]
    cdef Py_ssize_t i, j, prev
    cdef long long s
    cdef unsigned int obj
    out_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] out = out_arr
    # Fenwick tree over positions 1..n; a 1 marks the latest access of an object
    tree_arr = np.zeros(n + 1, dtype=np.int32)
    cdef int[::1] tree = tree_arr
    last_arr = np.zeros(n_objects, dtype=np.int64)
    cdef long long[::1] last = last_arr
    cdef long long live = 0

    for i in range(n):
        obj = refs[i]
        prev = last[obj]
        if prev:
            # prefix(i) - prefix(prev) == latest accesses strictly after prev
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
    return out_arr


def lru_misses(const unsigned int[::1] refs, Py_ssize_t n_objects, Py_ssize_t size):
    """Miss count of a cold-started LRU cache holding ``size`` entries."""
    cdef Py_ssize_t n = refs.shape[0]
    cdef Py_ssize_t i
    cdef long long misses = 0
    cdef Py_ssize_t used = 0
    cdef int obj, head = -1, tail = -1, victim, p, q
    # intrusive doubly linked list indexed by object id; head = MRU
    prv_arr = np.full(n_objects, -1, dtype=np.int32)
    nxt_arr = np.full(n_objects, -1, dtype=np.int32)
    inc_arr = np.zeros(n_objects, dtype=np.int8)
    cdef int[::1] prv = prv_arr
    cdef int[::1] nxt = nxt_arr
    cdef signed char[::1] incache = inc_arr

    for i in range(n):
        obj = <int>refs[i]
        if incache[obj]:
            if obj == head:
                continue
            p = prv[obj]
            q = nxt[obj]
            nxt[p] = q
            if q >= 0:
                prv[q] = p
            else:
                tail = p
        else:
            misses += 1
            if used == size:
                victim = tail
                tail = prv[victim]
                if tail >= 0:
                    nxt[tail] = -1
                else:
                    head = -1
                incache[victim] = 0
            else:
                used += 1
            incache[obj] = 1
        prv[obj] = -1
        nxt[obj] = head
        if head >= 0:
            prv[head] = obj
        head = obj
        if tail < 0:
            tail = obj
    return misses


def trie_lookup(const int[::1] left, const int[::1] right, const int[::1] value,
                const unsigned int[::1] addrs):
    """Longest-prefix match of each address against a flattened binary trie.

    Node 0 is the root. ``value[node]`` is a prefix index or -1.
    Returns the matched prefix index per address (-1 when none).
    """
    cdef Py_ssize_t n = addrs.shape[0]
    cdef Py_ssize_t i
    cdef int node, best, bit
    cdef unsigned int a
    out_arr = np.empty(n, dtype=np.int32)
    cdef int[::1] out = out_arr
    for i in range(n):
        a = addrs[i]
        node = 0
        best = value[0]
        bit = 31
        while bit >= 0:
            if (a >> bit) & 1:
                node = right[node]
            else:
                node = left[node]
            if node < 0:
                break
            if value[node] >= 0:
                best = value[node]
            bit -= 1
        out[i] = best
    return out_arr
