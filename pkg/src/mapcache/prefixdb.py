"""IPv4 prefix tables: parsing, more-specific filtering and longest-prefix match.

Tables are stored as a flattened binary trie (three ``int32`` arrays) so the
batch lookup in :mod:`mapcache.kernels` can walk it without Python objects.
"""
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DataError
from .refstring import ReferenceString, _text_lines, format_ipv4, parse_ipv4


def _mask(length):
    return (0xFFFFFFFF << (32 - length)) & 0xFFFFFFFF if length else 0


class Prefix(NamedTuple):
    network: int
    length: int

    def __str__(self):
        return f"{format_ipv4(self.network)}/{self.length}"

    def contains(self, addr):
        return (addr & _mask(self.length)) == self.network

    def covers(self, other):
        """True if every address of ``other`` lies inside this prefix."""
        return self.length <= other.length and self.contains(other.network)

    @classmethod
    def parse(cls, text):
        """Parse ``a.b.c.d/len``; host bits are masked off silently."""
        p = _parse_cidr(text)
        if p is None:
            raise DataError(f"bad prefix {text!r}")
        return p[0]


def _parse_cidr(text):
    addr_text, sep, len_text = text.partition("/")
    if not sep or not len_text.isdigit():
        return None
    length = int(len_text)
    addr = parse_ipv4(addr_text)
    if addr is None or length > 32:
        return None
    net = addr & _mask(length)
    return Prefix(net, length), net != addr


class PrefixTable:
    """An immutable set of prefixes supporting longest-prefix match.

    Lookups only read the trie arrays, so a table can be shared between
    threads.
    """

    def __init__(self, prefixes, masked_count=0, error_count=0):
        self.prefixes = tuple(sorted(set(prefixes)))
        self.masked_count = masked_count
        self.error_count = error_count
        self._index = {p: i for i, p in enumerate(self.prefixes)}
        self._build_trie()

    def _build_trie(self):
        left, right, value = [-1], [-1], [-1]
        for idx, (net, length) in enumerate(self.prefixes):
            node = 0
            for bit in range(31, 31 - length, -1):
                branch = right if (net >> bit) & 1 else left
                nxt = branch[node]
                if nxt < 0:
                    nxt = len(value)
                    branch[node] = nxt
                    left.append(-1)
                    right.append(-1)
                    value.append(-1)
                node = nxt
            value[node] = idx
        self._left = np.asarray(left, dtype=np.int32)
        self._right = np.asarray(right, dtype=np.int32)
        self._value = np.asarray(value, dtype=np.int32)
        for a in (self._left, self._right, self._value):
            a.setflags(write=False)

    @property
    def size(self):
        return len(self.prefixes)

    def __len__(self):
        return len(self.prefixes)

    def __iter__(self):
        return iter(self.prefixes)

    def __contains__(self, prefix):
        return prefix in self._index

    def __eq__(self, other):
        if not isinstance(other, PrefixTable):
            return NotImplemented
        return self.prefixes == other.prefixes

    def __repr__(self):
        return f"PrefixTable(size={self.size})"

    def index(self, prefix):
        return self._index[prefix]

    def lookup(self, addr):
        """Longest prefix containing ``addr`` (host-order int), or ``None``."""
        left, right, value = self._left, self._right, self._value
        node, best = 0, int(value[0])
        for bit in range(31, -1, -1):
            node = int(right[node] if (addr >> bit) & 1 else left[node])
            if node < 0:
                break
            if value[node] >= 0:
                best = int(value[node])
        return self.prefixes[best] if best >= 0 else None

    def lookup_indices(self, addrs):
        """Batch LPM; returns prefix indices with -1 where nothing matches."""
        return kernels.trie_lookup(self._left, self._right, self._value,
                                   np.asarray(addrs, dtype=np.uint32))

    def has_covering(self, prefix):
        """True if a strictly shorter prefix in the table covers ``prefix``."""
        left, right, value = self._left, self._right, self._value
        node = 0
        net, length = prefix
        for depth in range(length):
            if value[node] >= 0:
                return True
            bit = 31 - depth
            node = int(right[node] if (net >> bit) & 1 else left[node])
            if node < 0:
                return False
        return False


def parse_routing_table(stream):
    """Parse ``a.b.c.d/len`` lines into a :class:`PrefixTable`.

    Bad lines are counted in ``error_count``; prefixes with host bits set
    are masked and counted in ``masked_count``; exact duplicates collapse.

    Raises
    ------
    DataError
        No valid prefix in the input.
    """
    prefixes = set()
    masked = errors = 0
    for line in _text_lines(stream):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parsed = _parse_cidr(line)
        if parsed is None:
            errors += 1
            continue
        prefix, was_masked = parsed
        masked += was_masked
        prefixes.add(prefix)
    if not prefixes:
        raise DataError("routing table has no valid prefixes")
    return PrefixTable(prefixes, masked_count=masked, error_count=errors)


def filter_more_specifics(table):
    """Drop every prefix covered by another prefix of the same table."""
    kept = [p for p in table.prefixes if not table.has_covering(p)]
    return PrefixTable(kept)


def lookup(table, addr):
    if table.size == 0:
        raise DataError("lookup in empty table")
    return table.lookup(addr)


def map_trace(pkts, table):
    """Map packets to their longest-matching prefix.

    Returns
    -------
    (ReferenceString, int)
        References whose tokens are CIDR strings, and the number of packets
        without a matching prefix (excluded from the string).

    Raises
    ------
    DataError
        No packet matches any prefix.
    """
    idx = table.lookup_indices(pkts.dst)
    matched = idx[idx >= 0]
    unmatched = int(idx.shape[0] - matched.shape[0])
    if matched.size == 0:
        raise DataError(f"no packet matched the routing table ({unmatched} unmatched)")
    names = [str(p) for p in table.prefixes]
    return ReferenceString.from_ids(matched, symbols=names), unmatched


def coverage_ratio(distinct_prefixes_in_trace, filtered_table_size):
    """Fraction of the filtered table observed in a trace.

    Round to two decimals for display; the full value is returned.
    """
    if filtered_table_size <= 0:
        raise DataError("filtered table size must be positive")
    return distinct_prefixes_in_trace / filtered_table_size
