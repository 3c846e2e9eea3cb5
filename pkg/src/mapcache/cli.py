"""Command-line pipeline: ingest, map, measure, fit, simulate, model, compare.

Exit status is 0 on success, 1 on a usage error and 2 on a data error;
diagnostics go to standard error prefixed with ``error:``. Every output is
a function of the arguments and seed alone, so reruns are byte-identical.
"""
import argparse
import contextlib
import json
import os
import re
import sys
import warnings

import numpy as np

from . import __version__
from .errors import DataError
from .export import (ModelSpec, compare_curves, read_curve_csv, write_csv, write_curve_csv,
                     write_json)
from .locality import (inter_reference_histogram, length_frequency_correlation, rank_frequency,
                       working_set_curve)
from .lrusim import log_sizes, miss_rate_curve, simulate_lru_fixed, stack_distance_histogram
from .model import (GZipfParams, ThreeRegionParams, sensitivity_curve, size_of_miss_rate)
from .powerfit import fit_miss_rate_curve, fit_rank_frequency
from .prefixdb import coverage_ratio, filter_more_specifics, map_trace, parse_routing_table
from .refstring import read_object_trace, read_packet_trace, write_object_trace
from .synth import RankLaw, irm_shuffle, synthesize

EXIT_USAGE = 1
EXIT_DATA = 2

_PACKET_LINE = re.compile(r"^(\d+(\.\d*)?,)?\d{1,3}(\.\d{1,3}){3}$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


# -- argument types ----------------------------------------------------------------

def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _log_grid(text):
    """``lo:hi:steps`` as a triple."""
    parts = text.split(":")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise argparse.ArgumentTypeError(f"expected lo:hi:steps, got {text!r}")
    if len(parts) != 3 or not 0 < lo <= hi or steps < 1:
        raise argparse.ArgumentTypeError(f"need 0 < lo <= hi and steps >= 1, got {text!r}")
    return lo, hi, steps


def _range(text):
    parts = text.split(":")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except (IndexError, ValueError):
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    if len(parts) != 2 or lo > hi:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return lo, hi


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


# -- shared helpers ------------------------------------------------------------------

def _check_input(path):
    if path is not None and path != "-" and not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")


def _check_outputs(args):
    for name in ("out", "out_dir"):
        path = getattr(args, name, None)
        if path is None or path == "-":
            continue
        parent = path if name == "out_dir" else (os.path.dirname(os.path.abspath(path)) or ".")
        if name == "out_dir":
            os.makedirs(path, exist_ok=True)
        if not os.access(parent, os.W_OK):
            raise UsageError(f"cannot write to {parent}")


@contextlib.contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            yield f


def _open_in(path, mode="rb"):
    if path == "-":
        return contextlib.nullcontext(sys.stdin.buffer if "b" in mode else sys.stdin)
    return open(path, mode) if "b" in mode else open(path, mode, encoding="utf-8")


def _progress(args):
    if not getattr(args, "progress", False):
        return None
    return lambda n: print(f"{n} references read", file=sys.stderr, flush=True)


def _sniff_packet(path):
    with _open_in(path, "r") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                return bool(_PACKET_LINE.match(line))
    return False


def _load_trace(args, info=None):
    """Read ``args.trace`` as a reference string, mapping packet traces through ``--rib``."""
    fmt = args.format
    if fmt == "auto":
        fmt = "packet" if args.trace != "-" and _sniff_packet(args.trace) else "object"
    if fmt == "object":
        with _open_in(args.trace) as f:
            return read_object_trace(f, _progress(args))
    if args.rib is None:
        raise UsageError("a packet trace needs --rib to map addresses to prefixes")
    with _open_in(args.trace) as f:
        pkts = read_packet_trace(f, _progress(args))
    with _open_in(args.rib) as f:
        table = parse_routing_table(f)
    if not args.no_filter:
        table = filter_more_specifics(table)
    rs, unmatched = map_trace(pkts, table)
    if info is not None:
        info.update(packets=pkts, table=table, unmatched=unmatched)
    if pkts.malformed_count:
        print(f"warning: skipped {pkts.malformed_count} malformed packet line(s)", file=sys.stderr)
    if unmatched:
        print(f"warning: {unmatched} packet(s) matched no prefix", file=sys.stderr)
    return rs


def _sizes_from(args, default_hi=None):
    if args.sizes is not None:
        sizes = sorted(set(args.sizes))
        if sizes[0] < 1:
            raise UsageError("cache sizes must be >= 1")
        return np.asarray(sizes, dtype=np.int64)
    if args.log_sizes is not None:
        lo, hi, steps = args.log_sizes
        return log_sizes(max(1, round(lo)), max(1, round(hi)), steps)
    if default_hi is None:
        raise UsageError("give --sizes or --log-sizes")
    return log_sizes(1, default_hi, 60)


# -- subcommands ---------------------------------------------------------------------

def cmd_stats(args):
    info = {}
    rs = _load_trace(args, info)
    out = args.out_dir
    rft = rank_frequency(rs)
    with open(os.path.join(out, "rank_freq.csv"), "w", encoding="utf-8", newline="") as f:
        write_csv(f, ["rank", "count", "freq"], rft.rows())
    ir = inter_reference_histogram(rs)
    with open(os.path.join(out, "interref.csv"), "w", encoding="utf-8", newline="") as f:
        write_csv(f, ["t", "count"], ir.rows())
    if args.windows is not None:
        windows = np.asarray(sorted(set(args.windows)), dtype=np.int64)
    else:
        windows = log_sizes(1, max(1, rs.n_refs // 10), 40)
    ws = working_set_curve(rs, windows)
    with open(os.path.join(out, "workingset.csv"), "w", encoding="utf-8", newline="") as f:
        write_csv(f, ["T", "avg_size", "miss_rate"], ws.rows())

    summary = {"N": rs.n_refs, "D": rs.n_objects}
    pkts = info.get("packets")
    if pkts is not None:
        summary["packets"] = pkts.n_records
        summary["malformed"] = pkts.malformed_count
        summary["unmatched"] = info["unmatched"]
        if pkts.has_timestamps and pkts.n_records > 1:
            span = float(pkts.timestamps[-1] - pkts.timestamps[0])
            summary["avg_refs_per_s"] = rs.n_refs / span if span > 0 else None
        table = info["table"]
        summary["rib_prefixes"] = table.size
        summary["rho"] = coverage_ratio(rs.n_objects, table.size)
        if rs.n_objects >= 2:
            summary["length_frequency_spearman"] = length_frequency_correlation(rft, table)
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as f:
        write_json(f, summary)
    return 0


def cmd_fit(args):
    if (args.trace is None) == (args.curve is None):
        raise UsageError("give exactly one of --trace and --curve")
    if args.curve is not None:
        with _open_in(args.curve, "r") as f:
            curve = read_curve_csv(f)
        fit, alphas = fit_miss_rate_curve(curve, args.segments, args.x_range)
        result = {"kind": "miss_rate", "fit": fit.to_dict(), "alphas": list(alphas)}
    else:
        rs = _load_trace(args)
        rft = rank_frequency(rs)
        fit, pe = fit_rank_frequency(rft, args.segments, args.min_count, args.x_range)
        result = {"kind": "popularity", "fit": fit.to_dict(), "alphas": list(pe.alphas),
                  "crossover_freqs": list(pe.crossover_freqs), "n_refs": rs.n_refs,
                  "n_objects": rs.n_objects}
        model = _model_from_popularity(pe, rs)
        if model is not None:
            result["model"] = model
    with _open_out(args.out) as f:
        write_json(f, result)
    return 0


def _model_from_popularity(pe, rs):
    """Model parameter block for ``compare``/``model``, or None if outside the domain."""
    try:
        if len(pe.alphas) == 3:
            return ThreeRegionParams(pe.alphas, pe.crossover_freqs, rs.n_refs,
                                     rs.n_objects).to_dict()
        if len(pe.alphas) == 2:
            q, r = pe.alphas
            return GZipfParams.from_crossover(q, r, pe.crossover_freqs[0], rs.n_refs).to_dict()
    except DataError as e:
        print(f"warning: fitted exponents give no model: {e}", file=sys.stderr)
    return None


def _law(args, scale=1):
    d = args.objects * scale
    if args.uniform:
        return RankLaw.uniform(d)
    if args.q is None or args.r is None:
        raise UsageError("give --q and --r, or --uniform")
    kc = args.crossover_rank if args.crossover_rank is not None else d
    return RankLaw.from_gzipf(args.q, args.r, d, min(d, kc * scale))


def cmd_synth(args):
    rs = synthesize(_law(args), args.refs, args.seed)
    with _open_out(args.out) as f:
        write_object_trace(rs, f)
    return 0


def cmd_shuffle(args):
    rs = irm_shuffle(_load_trace(args), args.seed)
    with _open_out(args.out) as f:
        write_object_trace(rs, f)
    return 0


def cmd_simulate(args):
    rs = _load_trace(args)
    rows = []
    for s in _sizes_from(args).tolist():
        st = simulate_lru_fixed(rs, s, args.warmup)
        rows.append((s, st.miss_rate))
    with _open_out(args.out) as f:
        write_csv(f, ["size", "miss_rate"], rows)
    return 0


def cmd_curve(args):
    rs = _load_trace(args)
    h = stack_distance_histogram(rs, args.warmup)
    curve = miss_rate_curve(h, _sizes_from(args, default_hi=rs.n_objects))
    with _open_out(args.out) as f:
        write_curve_csv(f, curve)
    return 0


def _load_model(args):
    if args.params is not None:
        with _open_in(args.params, "r") as f:
            spec = ModelSpec.load(f)
        if isinstance(spec.params, GZipfParams) and any(
                v is not None for v in (args.q, args.r, args.nu_k, args.n_refs)):
            p = spec.params
            q = args.q if args.q is not None else p.q
            r = args.r if args.r is not None else p.r
            nu = args.nu_k if args.nu_k is not None else p.nu_k
            n = args.n_refs if args.n_refs is not None else p.n_refs
            spec = ModelSpec(GZipfParams.from_crossover(q, r, nu, n, mu=p.mu))
        return spec
    if args.q is None or args.r is None or args.nu_k is None:
        raise UsageError("give --params, or --q, --r and --nu-k")
    n = args.n_refs if args.n_refs is not None else 10 ** 6
    return ModelSpec(GZipfParams.from_crossover(args.q, args.r, args.nu_k, n))


def cmd_model(args):
    spec = _load_model(args)
    if args.sensitivity is not None:
        if not isinstance(spec.params, GZipfParams):
            raise UsageError("--sensitivity needs GZipf parameters")
        lo, hi, steps = args.grid
        grid = np.linspace(lo, hi, steps)
        rows = sensitivity_curve(args.sensitivity, grid, spec.params, pin_r=args.pin_r)
        with _open_out(args.out) as f:
            write_csv(f, ["exponent", "size"], rows)
        return 0
    if args.miss_rates is not None:
        if not isinstance(spec.params, GZipfParams):
            raise UsageError("--miss-rates needs GZipf parameters")
        rows = [(m, size_of_miss_rate(m, spec.params)) for m in args.miss_rates]
        with _open_out(args.out) as f:
            write_csv(f, ["miss_rate", "size"], rows)
        return 0
    curve = spec.curve(_sizes_from(args))
    with _open_out(args.out) as f:
        write_curve_csv(f, curve)
    return 0


def cmd_compare(args):
    with _open_in(args.empirical, "r") as f:
        emp = read_curve_csv(f)
    if args.model.endswith(".csv"):
        with _open_in(args.model, "r") as f:
            mod = read_curve_csv(f, "analytic")
    else:
        with _open_in(args.model, "r") as f:
            d = json.load(f)
        if isinstance(d, dict) and "model" in d and "kind" in d and d["kind"] == "popularity":
            d = d["model"]
        mod = ModelSpec.from_dict(d).curve(emp.sizes)
    rows, worst = compare_curves(emp, mod, args.s_min)
    with _open_out(args.out) as f:
        write_csv(f, ["size", "m_empirical", "m_model", "log10_ratio"], rows)
    print(f"max |log10 ratio| for s >= {args.s_min:g}: {worst:.6g}", file=sys.stderr)
    return 0


def cmd_scaling(args):
    rows = []
    for factor in args.factors:
        if factor < 1:
            raise UsageError("factors must be >= 1")
        law = _law(args, factor if args.scale_objects else 1)
        rs = synthesize(law, args.refs * factor, args.seed)
        h = stack_distance_histogram(rs)
        curve = miss_rate_curve(h, np.arange(1, rs.n_objects + 1))
        rows.append((factor, rs.n_refs, rs.n_objects, curve.size_at(args.target)))
    with _open_out(args.out) as f:
        write_csv(f, ["factor", "N", "D", "s_at_fixed_m"], rows)
    return 0


# -- parser ----------------------------------------------------------------------------

def _add_trace(p, required=True):
    p.add_argument("--trace", required=required, help="object or packet trace ('-' for stdin)")
    p.add_argument("--format", choices=("auto", "object", "packet"), default="auto",
                   help="trace format (default: sniff the first data line)")
    p.add_argument("--rib", help="routing table mapping packet traces to prefixes")
    p.add_argument("--no-filter", action="store_true",
                   help="keep more-specific prefixes in the routing table")
    p.add_argument("--progress", action="store_true", help="report read progress on stderr")


def _add_sizes(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sizes", type=_int_list, help="comma-separated cache sizes")
    g.add_argument("--log-sizes", type=_log_grid, metavar="LO:HI:STEPS",
                   help="log-spaced integer cache sizes")


def _add_law(p):
    p.add_argument("--objects", type=int, required=True, help="number of objects D")
    p.add_argument("--q", type=float, help="head GZipf exponent")
    p.add_argument("--r", type=float, help="tail GZipf exponent")
    p.add_argument("--crossover-rank", type=int, help="rank k_c where the tail starts")
    p.add_argument("--uniform", action="store_true", help="equal popularity for all objects")
    p.add_argument("--refs", type=int, required=True, help="number of references N")
    p.add_argument("--seed", type=_seed, default=0, help="64-bit PCG64 seed (default 0)")


def build_parser():
    ap = _Parser(prog="mapcache", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("stats", help="popularity, inter-reference and working-set statistics")
    _add_trace(p)
    p.add_argument("--out-dir", required=True, help="directory for the CSV/JSON outputs")
    p.add_argument("--windows", type=_int_list, help="working-set windows (default: log grid)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fit", help="piecewise power-law fit of popularity or a miss-rate curve")
    _add_trace(p, required=False)
    p.add_argument("--curve", help="size,miss_rate CSV to fit instead of a trace")
    p.add_argument("--segments", type=int, choices=(1, 2, 3), default=3)
    p.add_argument("--min-count", type=int, default=1,
                   help="leave out ranks with fewer references (default 1: keep all)")
    p.add_argument("--x-range", type=_range, metavar="LO:HI", help="x interval to fit")
    p.add_argument("--out", help="JSON output (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="synthesize an IRM object trace")
    _add_law(p)
    p.add_argument("--out", help="object trace output (default stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("shuffle", help="uniformly permute a trace")
    _add_trace(p)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", help="object trace output (default stdout)")
    p.set_defaults(func=cmd_shuffle)

    p = sub.add_parser("simulate", help="fixed-size LRU simulation per cache size")
    _add_trace(p)
    _add_sizes(p)
    p.add_argument("--warmup", type=int, default=0, help="references excluded from the counts")
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("curve", help="LRU miss-rate curve from stack distances")
    _add_trace(p)
    _add_sizes(p)
    p.add_argument("--warmup", type=int, default=0, help="references excluded from the counts")
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("model", help="analytic miss-rate curve, inverse or sensitivity")
    p.add_argument("--params", help="GZipf or three-region parameter JSON")
    p.add_argument("--q", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--nu-k", type=float, help="crossover frequency")
    p.add_argument("--n-refs", type=int)
    _add_sizes(p)
    p.add_argument("--miss-rates", type=_float_list, help="report cache size for these rates")
    p.add_argument("--sensitivity", type=float, metavar="M",
                   help="cache size at miss rate M as the exponent varies")
    p.add_argument("--grid", type=_log_grid, default=(1.05, 1.95, 19), metavar="LO:HI:STEPS",
                   help="exponent grid for --sensitivity (linear spacing)")
    p.add_argument("--pin-r", action="store_true", help="hold r fixed in --sensitivity")
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("compare", help="join an empirical curve with a model")
    p.add_argument("empirical", help="size,miss_rate CSV")
    p.add_argument("model", help="parameter JSON (or fit JSON) or a size,miss_rate CSV")
    p.add_argument("--s-min", type=float, default=0.0,
                   help="smallest size counted in the summary maximum")
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scaling", help="cache size for a fixed miss rate as N (and D) grow")
    _add_law(p)
    p.add_argument("--factors", type=_int_list, default=[1, 4])
    p.add_argument("--scale-objects", action="store_true",
                   help="scale D and the crossover rank with N")
    p.add_argument("--target", type=float, default=0.05, help="target miss rate")
    p.add_argument("--out", help="CSV output (default stdout)")
    p.set_defaults(func=cmd_scaling)
    return ap


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        try:
            for name in ("trace", "rib", "curve", "params", "empirical", "model"):
                _check_input(getattr(args, name, None))
            _check_outputs(args)
            return args.func(args)
        except UsageError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except DataError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_DATA
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
