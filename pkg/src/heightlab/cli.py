"""Command line front end.

Exit codes: 0 success, 2 unreadable input or arguments, 3 no relative
monodromy filtration, 4 negative pairing, 5 numerical precision failure.
The default working precision comes from ``HEIGHTLAB_PRECISION`` (bits).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

import mpmath

from . import __version__
from .experiments import (
    ExperimentConfig,
    SamplePointError,
    ga1_experiment,
    ga2_experiment,
    parse_family,
    parse_sweep,
)
from .geoheight import MissingRMF, NegativePairing, global_geometric_height, local_geometric_height
from .hodge.metric import HodgeContext, NotPositiveDefinite
from .hodge.mhs import MHSAxiomViolation, NonConvergence
from .hodge.zeta import CoefficientTableMissing, default_zeta_table, load_zeta_table
from .io import ParseError, load_document, read_filtration, read_matrix, read_motive, read_variation
from .monodromy import (
    NilpotentMap,
    NonExistence,
    NotFound,
    deligne_splitting,
    find_graded_splitting,
    nbar_classes,
    relative_monodromy_filtration,
)
from .motives import (
    arch_local_height,
    finite_local_height,
    kummer_motive,
    total_height,
)

EXIT_OK, EXIT_PARSE, EXIT_NONEXISTENCE, EXIT_NEGATIVE, EXIT_PRECISION = 0, 2, 3, 4, 5
ENV_PRECISION = "HEIGHTLAB_PRECISION"


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _fmt(x, digits: int) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (mpmath.mpf, float)):
        return mpmath.nstr(mpmath.mpf(x), digits, min_fixed=-mpmath.inf, max_fixed=mpmath.inf) \
            if x != 0 else "0"
    if x is None:
        return ""
    return str(x)


def _log_multiple(c: Fraction | None, p: int | None) -> str:
    if c is None or p is None:
        return ""
    return "0" if c == 0 else f"{c}*log({p})"


def emit(columns: list[str], rows: list[dict], fmt: str, digits: int, out, notes=()) -> None:
    cells = [[_fmt(r.get(c), digits) for c in columns] for r in rows]
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(columns)
        w.writerows(cells)
    elif fmt == "rows":
        # integers stay JSON numbers; heights are strings so no digits are lost
        for r, cs in zip(rows, cells):
            rec = {c: (r[c] if type(r.get(c)) is int else v) for c, v in zip(columns, cs)}
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        for n in notes:
            out.write(json.dumps({"note": n}) + "\n")
    else:
        widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(columns)]
        out.write("  ".join(c.ljust(wd) for c, wd in zip(columns, widths)).rstrip() + "\n")
        for r in cells:
            out.write("  ".join(v.ljust(wd) for v, wd in zip(r, widths)).rstrip() + "\n")
        for n in notes:
            out.write(f"# {n}\n")


def _vec(v) -> str:
    return "[" + ", ".join(str(x) for x in v) + "]"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _need_input(args) -> dict:
    if not args.input:
        raise _Failure(EXIT_PARSE, f"{args.command} needs --input")
    return load_document(args.input)


def _ctx(args) -> HodgeContext:
    table = load_zeta_table(args.zeta_table) if args.zeta_table else default_zeta_table()
    return HodgeContext(prec=args.precision, zeta_table=table)


def _single_N(doc):
    W = read_filtration(doc)
    if "N" not in doc:
        raise ParseError("the document needs 'N'")
    return NilpotentMap.of(read_matrix(doc["N"], "N")), W


def cmd_rmf(args):
    N, W = _single_N(_need_input(args))
    Wp = relative_monodromy_filtration(N, W)
    if isinstance(Wp, NonExistence):
        raise _Failure(EXIT_NONEXISTENCE, f"no relative monodromy filtration: {Wp.reason}")
    rows = [{"index": k, "dim": S.dim, "basis": "; ".join(_vec(b) for b in S.basis)} for k, S in Wp.steps]
    return ["index", "dim", "basis"], rows, []


def cmd_split(args):
    N, W = _single_N(_need_input(args))
    Wp = relative_monodromy_filtration(N, W)
    if isinstance(Wp, NonExistence):
        raise _Failure(EXIT_NONEXISTENCE, f"no relative monodromy filtration: {Wp.reason}")
    U = find_graded_splitting(N, W, Wp)
    if isinstance(U, NotFound):
        raise _Failure(EXIT_NONEXISTENCE, f"no graded splitting: {U.reason}")
    ds = deligne_splitting(N, W, Wp, U)
    classes = nbar_classes(N, W, Wp, U)
    rows = []
    for k, S in U.components:
        rows.append({"kind": "U'", "index": k, "value": "; ".join(_vec(b) for b in S.basis)})
    for w in sorted(ds.components):
        rows.append({"kind": "N_w", "index": w, "value": "; ".join(_vec(r) for r in ds.components[w].rows)})
    for w in sorted(classes):
        rows.append({"kind": "Nbar_w", "index": w, "value": _vec(classes[w])})
    return ["kind", "index", "value"], rows, []


def cmd_geo_height(args):
    gv = read_variation(_need_input(args))
    rows = []
    with mpmath.workprec(args.precision):
        for x in gv.points:
            rows.append({"point": x.label, "w": args.w, "d": args.d,
                         "height": local_geometric_height(gv, x, args.w, args.d, args.precision)})
        total = global_geometric_height(gv, args.w, args.d, args.precision)
    rows.append({"point": "total", "w": args.w, "d": args.d, "height": total})
    return ["point", "w", "d", "height"], rows, []


def _place_rows(M, args, ctx, kinds):
    rows = []
    for v in M.finite_places:
        if "finite" in kinds and args.place in (None, v.label):
            lh = finite_local_height(M, v, args.w, args.d, args.precision)
            rows.append({"place": v.label, "w": args.w, "d": args.d, "height": lh.value,
                         "exact": _log_multiple(lh.coefficient, lh.log_of)})
    for v in M.arch_places:
        if "arch" in kinds and args.place in (None, v.label):
            lh = arch_local_height(M, v, args.w, args.d, ctx)
            rows.append({"place": v.label, "w": args.w, "d": args.d, "height": lh.value, "exact": ""})
    return rows


def _with_total(rows, args):
    with mpmath.workprec(args.precision):
        total = mpmath.fsum([r["height"] for r in rows]) if rows else mpmath.mpf(0)
    return rows + [{"place": "total", "w": args.w, "d": args.d, "height": total, "exact": ""}]


COLS = ["place", "w", "d", "height", "exact"]


def cmd_arch_height(args):
    M = read_motive(_need_input(args), args.precision)
    return COLS, _with_total(_place_rows(M, args, _ctx(args), {"arch"}), args), []


def cmd_kummer(args):
    if args.a is None:
        raise _Failure(EXIT_PARSE, "kummer needs --a")
    try:
        a = Fraction(args.a)
    except (ValueError, ZeroDivisionError):
        raise _Failure(EXIT_PARSE, f"--a must be a rational, got {args.a!r}") from None
    if a == 0:
        raise _Failure(EXIT_PARSE, "--a must be nonzero")
    M = kummer_motive(a, args.precision)
    return COLS, _with_total(_place_rows(M, args, _ctx(args), {"finite", "arch"}), args), []


def cmd_total(args):
    M = read_motive(_need_input(args), args.precision)
    rep = total_height(M, _ctx(args))
    rows = [{"w": w, "d": d, "height": v, "note": note} for w, d, v, note in rep.per_wd]
    rows.append({"w": "", "d": "", "height": rep.total, "note": "total"})
    return ["w", "d", "height", "note"], rows, rep.notes


def _samples(args, fam):
    pts = []
    if args.points:
        try:
            pts += [Fraction(s) for s in args.points.split(",") if s.strip()]
        except (ValueError, ZeroDivisionError):
            raise _Failure(EXIT_PARSE, f"bad --points {args.points!r}") from None
        for t in pts:
            fam(t)
    if args.sweep:
        for t in parse_sweep(args.sweep):
            try:
                fam(t)
            except SamplePointError:
                continue
            pts.append(t)
    if not pts:
        raise _Failure(EXIT_PARSE, "give --points or --sweep")
    return tuple(pts)


def cmd_ga1(args):
    fam = parse_family(args.family)
    cfg = ExperimentConfig(fam, _samples(args, fam), w=args.w, d=args.d,
                           prec=args.precision, jobs=args.jobs, min_height=args.min_height)
    r = ga1_experiment(cfg)
    rows = [{"t": t, "h(t)": x, "h(M(t))": h, "residual": h - r.geometric_height * x} for t, x, h in r.rows]
    notes = [
        f"family a(T) = {fam}",
        f"geometric height {r.geometric_height}",
        f"LAD slope {r.slope:.6f} intercept {r.intercept:.6f} over {r.sample_count} samples",
        f"fit residual band [{r.residual_min:.6g}, {r.residual_max:.6g}]",
        f"GA1 residual band [{mpmath.nstr(r.ga1_residual_min, 6)}, {mpmath.nstr(r.ga1_residual_max, 6)}]"
        f" width {r.band_width:.6g}",
    ]
    return ["t", "h(t)", "h(M(t))", "residual"], rows, notes


def cmd_ga2(args):
    fam = parse_family(args.family)
    x = None if args.x in (None, "inf") else Fraction(args.x)
    place = args.place or "inf"
    if place != "inf" and not place.isdigit():
        raise _Failure(EXIT_PARSE, "--place must be a prime or 'inf'")
    cfg = ExperimentConfig(fam, _samples(args, fam), place=place, base_point=x,
                           w=args.w, d=args.d, prec=args.precision)
    geo, rows = ga2_experiment(cfg)
    out = [{"t": r.t, "h_v(M(t))": r.local, "h_x,v(t)": r.point, "residual": r.residual,
            "zero": "yes" if r.is_zero else "no"} for r in rows]
    notes = [f"family a(T) = {fam}, x = {args.x or 'inf'}, v = {place}",
             f"geometric local height {geo}"]
    return ["t", "h_v(M(t))", "h_x,v(t)", "residual", "zero"], out, notes


COMMANDS = {
    "rmf": cmd_rmf,
    "split": cmd_split,
    "geo-height": cmd_geo_height,
    "arch-height": cmd_arch_height,
    "kummer": cmd_kummer,
    "total": cmd_total,
    "ga1": cmd_ga1,
    "ga2": cmd_ga2,
}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _default_precision() -> int:
    raw = os.environ.get(ENV_PRECISION)
    if raw is None:
        return 128
    try:
        p = int(raw)
    except ValueError:
        raise _Failure(EXIT_PARSE, f"{ENV_PRECISION} must be an integer number of bits") from None
    return p


def build_parser(default_prec: int) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="description document (YAML)")
    common.add_argument("--a", help="Kummer parameter, a nonzero rational")
    common.add_argument("--w", type=int, default=0, help="weight w (default 0)")
    common.add_argument("--d", type=int, default=2, help="weight gap d (default 2)")
    common.add_argument("--place", help="restrict to one place label; for ga2 a prime or 'inf'")
    common.add_argument("--precision", type=int, default=default_prec,
                        help=f"working precision in bits (default {default_prec}, from ${ENV_PRECISION})")
    common.add_argument("--zeta-table", help="coefficient table file for the correction term")
    common.add_argument("--format", choices=["text", "csv", "rows"], default="text")
    common.add_argument("--digits", type=int, default=20, help="significant digits in reports")
    common.add_argument("--sweep", help="farey:N, pow:B:K1:K2 or random:CAP:COUNT:SEED")
    common.add_argument("--points", help="comma separated rationals")
    common.add_argument("--family", default="T", help="a(T) for ga1/ga2, e.g. 'T*(T-1)^2'")
    common.add_argument("--x", help="ga2 base point: a rational or 'inf'")
    common.add_argument("--min-height", type=float, help="ga1: keep samples with h(t) at least this")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")

    p = argparse.ArgumentParser(prog="heightlab", description="Heights of mixed motives from realization data.")
    p.add_argument("--version", action="version", version=f"heightlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "rmf": "relative monodromy filtration of (N, W)",
        "split": "graded and Deligne splittings with the classes Nbar_w",
        "geo-height": "geometric heights h_{w,d} over the degeneration points",
        "arch-height": "archimedean local heights of a motive document",
        "kummer": "local and global heights of a Kummer motive",
        "total": "total height report of a motive document",
        "ga1": "global specialisation experiment for a Kummer family",
        "ga2": "local specialisation experiment near a degeneration point",
    }
    for name, h in helps.items():
        sub.add_parser(name, parents=[common], help=h)
    return p


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        default_prec = _default_precision()
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    parser = build_parser(default_prec)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    if args.precision < 53:
        print("error: --precision must be at least 53 bits", file=sys.stderr)
        return EXIT_PARSE
    try:
        with mpmath.workprec(args.precision):
            columns, rows, notes = COMMANDS[args.command](args)
            buf = io.StringIO()
            emit(columns, rows, args.format, args.digits, buf, notes)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except MissingRMF as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONEXISTENCE
    except (NegativePairing, NotPositiveDefinite) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except NonConvergence as exc:
        print(f"error: precision failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (ParseError, SamplePointError, MHSAxiomViolation, CoefficientTableMissing, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    out.write(buf.getvalue())
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
