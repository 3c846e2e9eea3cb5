"""CSV and JSON files exchanged between pipeline stages.

Every CSV has a header row and a fixed column order; floats are written
with ``repr`` (shortest round-tripping form) so reruns are byte-identical.
JSON objects keep insertion order and end with a newline.
"""
import csv
import json
import math

import numpy as np

from .errors import DataError, ParseError
from .model import GZipfParams, MissRateCurve, ThreeRegionParams, miss_rate_of_size, \
    three_region_miss_curve


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(stream, header, rows):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])


def write_json(stream, obj):
    json.dump(obj, stream, indent=2, allow_nan=False)
    stream.write("\n")


def read_csv_columns(stream, names):
    """Read the named numeric columns of a headed CSV as float arrays."""
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty CSV file") from None
    missing = [n for n in names if n not in header]
    if missing:
        raise DataError(f"CSV lacks column(s) {', '.join(missing)}; header is {header}")
    idx = [header.index(n) for n in names]
    cols = [[] for _ in names]
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        try:
            for c, i in zip(cols, idx):
                c.append(float(row[i]))
        except (IndexError, ValueError):
            raise ParseError(f"bad CSV row {row}", lineno) from None
    if not cols[0]:
        raise DataError("CSV has no data rows")
    return [np.asarray(c) for c in cols]


def read_curve_csv(stream, source="empirical"):
    """A ``size,miss_rate`` CSV as a :class:`MissRateCurve`."""
    sizes, rates = read_csv_columns(stream, ["size", "miss_rate"])
    if np.any(sizes <= 0) or np.any(np.diff(sizes) <= 0):
        raise DataError("curve sizes must be positive and strictly increasing")
    if np.any((rates < 0) | (rates > 1)):
        raise DataError("miss rates must lie in [0, 1]")
    return MissRateCurve(sizes, rates, source)


def write_curve_csv(stream, curve):
    sizes = curve.sizes
    as_int = np.all(sizes == np.round(sizes))
    rows = zip(sizes.astype(np.int64).tolist() if as_int else sizes.tolist(),
               curve.miss_rates.tolist())
    write_csv(stream, ["size", "miss_rate"], rows)


class ModelSpec:
    """A parameter file loaded for evaluation: GZipf or three-region.

    Three-region files may carry ``"boundaries": [s1, s2]`` to place the
    regime boundaries explicitly.
    """

    def __init__(self, params, boundaries=None):
        self.params = params
        self.boundaries = boundaries

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise DataError("model parameters must be a JSON object")
        kind = d.get("kind") or ("three_region" if "alphas" in d else "gzipf")
        if kind == "gzipf":
            return cls(GZipfParams.from_dict(d))
        if kind == "three_region":
            b = d.get("boundaries")
            return cls(ThreeRegionParams.from_dict(d), None if b is None else tuple(b))
        raise DataError(f"unknown model kind {kind!r}")

    @classmethod
    def load(cls, stream):
        try:
            d = json.load(stream)
        except json.JSONDecodeError as e:
            raise DataError(f"invalid JSON: {e}") from None
        return cls.from_dict(d)

    def curve(self, sizes):
        sizes = np.asarray(sizes, dtype=np.float64)
        if isinstance(self.params, GZipfParams):
            return MissRateCurve(sizes, miss_rate_of_size(sizes, self.params), "analytic")
        return three_region_miss_curve(self.params, sizes, self.boundaries)

    def to_dict(self):
        d = self.params.to_dict()
        if self.boundaries is not None:
            d["boundaries"] = list(self.boundaries)
        return d


def compare_curves(empirical, model, s_min=0.0):
    """Join two curves on their common sizes.

    Returns
    -------
    rows : list of (size, m_empirical, m_model, log10_ratio)
    max_abs : float
        Largest ``|log10(m_model / m_empirical)|`` over sizes ``>= s_min``
        (NaN when no joined size reaches ``s_min``).
    """
    common, ie, im = np.intersect1d(empirical.sizes, model.sizes, return_indices=True)
    if common.size == 0:
        raise DataError("empirical and model curves share no cache sizes")
    me, mm = empirical.miss_rates[ie], model.miss_rates[im]
    if np.any(me <= 0) or np.any(mm <= 0):
        raise DataError("log ratio needs positive miss rates")
    ratio = np.log10(mm / me)
    sel = common >= s_min
    max_abs = float(np.abs(ratio[sel]).max()) if sel.any() else math.nan
    sizes = common.astype(np.int64).tolist() if np.all(common == np.round(common)) else common.tolist()
    rows = list(zip(sizes, me.tolist(), mm.tolist(), ratio.tolist()))
    return rows, max_abs
