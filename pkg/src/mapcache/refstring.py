"""Reference strings and trace ingestion.

A reference string is the ordered sequence of object ids a cache sees.
Two on-disk formats are read here:

* object traces: one token per line, ``#`` comments, strict parsing;
* packet traces: ``epoch_seconds,a.b.c.d`` or ``a.b.c.d`` per line,
  malformed lines skipped and counted.

Both readers are single pass and keep only the interning table and a
compact ``uint32`` id buffer in memory.
"""
from array import array
from dataclasses import dataclass, field
import io

import numpy as np

from .errors import DataError, ParseError

PROGRESS_EVERY = 1_000_000


@dataclass(frozen=True, eq=False)
class ReferenceString:
    """An immutable sequence of dense object ids with their original tokens.

    Attributes
    ----------
    refs : numpy.ndarray
        ``uint32`` ids in reference order, read-only.
    symbol_table : tuple of str
        ``symbol_table[i]`` is the token interned as id ``i``.
    """

    refs: np.ndarray
    symbol_table: tuple = field(default=())

    def __post_init__(self):
        refs = np.ascontiguousarray(self.refs, dtype=np.uint32)
        refs.setflags(write=False)
        object.__setattr__(self, "refs", refs)
        object.__setattr__(self, "symbol_table", tuple(self.symbol_table))

    @property
    def n_refs(self):
        return int(self.refs.shape[0])

    @property
    def n_objects(self):
        return len(self.symbol_table)

    def __len__(self):
        return self.n_refs

    def __eq__(self, other):
        if not isinstance(other, ReferenceString):
            return NotImplemented
        return (self.symbol_table == other.symbol_table
                and np.array_equal(self.refs, other.refs))

    def tokens(self):
        """Iterate over the original tokens in reference order."""
        table = self.symbol_table
        for i in self.refs.tolist():
            yield table[i]

    @classmethod
    def from_tokens(cls, tokens):
        """Intern an iterable of hashable tokens in first-seen order."""
        ids = {}
        buf = array("I")
        for tok in tokens:
            i = ids.get(tok)
            if i is None:
                i = ids[tok] = len(ids)
            buf.append(i)
        return cls(np.frombuffer(buf, dtype=np.uint32).copy(),
                   tuple(str(t) for t in ids))

    @classmethod
    def from_ids(cls, ids, symbols=None):
        """Re-intern arbitrary non-negative integer ids densely, first-seen order.

        ``symbols[j]`` names raw id ``j``; by default the raw id's decimal text.
        """
        ids = np.asarray(ids)
        if ids.size == 0:
            return cls(np.zeros(0, dtype=np.uint32), ())
        if ids.min() < 0:
            raise DataError("object ids must be non-negative")
        uniq, first, inverse = np.unique(ids, return_index=True, return_inverse=True)
        order = np.argsort(first, kind="stable")
        remap = np.empty_like(order)
        remap[order] = np.arange(order.size)
        dense = remap[inverse.ravel()].astype(np.uint32)
        raw = uniq[order].tolist()
        if symbols is None:
            table = tuple(str(r) for r in raw)
        else:
            table = tuple(str(symbols[r]) for r in raw)
        return cls(dense, table)


@dataclass(frozen=True, eq=False)
class PacketTrace:
    """Destination addresses (host-order ``uint32``) with optional timestamps."""

    dst: np.ndarray
    timestamps: np.ndarray = None
    malformed_count: int = 0

    @property
    def n_records(self):
        return int(self.dst.shape[0])

    def __len__(self):
        return self.n_records

    @property
    def has_timestamps(self):
        return self.timestamps is not None


def _text_lines(stream):
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    for raw in stream:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw.rstrip("\r\n")


def read_object_trace(stream, progress=None):
    """Read a one-token-per-line object trace.

    Parameters
    ----------
    stream : binary or text file object, bytes or str
        UTF-8 input, LF or CRLF line endings.
    progress : callable, optional
        Called with the running reference count every million references.

    Raises
    ------
    ParseError
        A line is blank or contains whitespace.
    DataError
        The trace holds no references.
    """
    ids = {}
    buf = array("I")
    for lineno, line in enumerate(_text_lines(stream), 1):
        if line.startswith("#"):
            continue
        if not line:
            raise ParseError("empty token", lineno)
        if len(line.split()) != 1 or line.strip() != line:
            raise ParseError(f"whitespace in token {line!r}", lineno)
        i = ids.get(line)
        if i is None:
            i = ids[line] = len(ids)
        buf.append(i)
        if progress is not None and len(buf) % PROGRESS_EVERY == 0:
            progress(len(buf))
    if not buf:
        raise DataError("empty trace")
    return ReferenceString(np.frombuffer(buf, dtype=np.uint32).copy(), tuple(ids))


def write_object_trace(rs, stream):
    """Write ``rs`` in the object-trace format (text stream).

    Raises :class:`DataError` for tokens the reader would not accept back
    (empty, containing whitespace, or starting with ``#``).
    """
    table = rs.symbol_table
    for tok in table:
        if not tok or tok.startswith("#") or len(tok.split()) != 1 or tok.strip() != tok:
            raise DataError(f"token {tok!r} cannot be written as an object trace")
    # chunked join keeps peak memory bounded on long strings
    refs = rs.refs
    for lo in range(0, refs.shape[0], 1 << 16):
        stream.write("".join(table[i] + "\n" for i in refs[lo:lo + (1 << 16)].tolist()))


def parse_ipv4(text):
    """Parse a dotted quad to a host-order integer; ``None`` if malformed."""
    parts = text.split(".")
    if len(parts) != 4:
        return None
    value = 0
    for p in parts:
        if not p or len(p) > 3 or not p.isascii() or not p.isdigit():
            return None
        b = int(p)
        if b > 255:
            return None
        value = (value << 8) | b
    return value


def format_ipv4(value):
    return f"{value >> 24 & 255}.{value >> 16 & 255}.{value >> 8 & 255}.{value & 255}"


def read_packet_trace(stream, progress=None):
    """Read a packet trace of ``epoch_seconds,dotted_quad`` or ``dotted_quad`` lines.

    Malformed lines are skipped and counted in ``malformed_count``. Input
    order is kept as is; timestamps need not be sorted.

    Raises
    ------
    DataError
        Empty input, every line malformed, or lines mixing the two layouts
        ("inconsistent format").
    """
    dst = array("I")
    ts = array("d")
    timed = None
    malformed = 0
    for lineno, line in enumerate(_text_lines(stream), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "," in line:
            stamp, _, addr_text = line.partition(",")
            addr = parse_ipv4(addr_text.strip())
            try:
                t = float(stamp)
            except ValueError:
                addr = None
            this_timed = True
        else:
            addr = parse_ipv4(line)
            this_timed = False
        if addr is None:
            malformed += 1
            continue
        if timed is None:
            timed = this_timed
        elif timed != this_timed:
            raise ParseError("inconsistent format", lineno)
        dst.append(addr)
        if timed:
            ts.append(t)
        if progress is not None and len(dst) % PROGRESS_EVERY == 0:
            progress(len(dst))
    if not dst:
        if malformed:
            raise DataError(f"all {malformed} packet lines malformed")
        raise DataError("empty trace")
    return PacketTrace(
        np.frombuffer(dst, dtype=np.uint32).copy(),
        np.frombuffer(ts, dtype=np.float64).copy() if timed else None,
        malformed,
    )
