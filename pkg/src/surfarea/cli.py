"""Command-line experiment runner.

Every subcommand writes CSV (to ``--output`` or stdout) with ``#``-prefixed
metadata lines.  Exit codes: 0 success, 1 computation-level failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, verify
from .fields import OrientedRect, cantor, parse_descriptor
from .geocze import DEFAULT_ORDER, DEFAULT_TOL, Subdivision, geocze_area, ladder_panels
from .lantern import LanternPath, LanternSpec, PathKind, lantern_area, lantern_limit, lantern_vertex_oracle
from .mollify import integral_mean, l1_distance, l1_norm
from .quasilinear import elementary_area, interpolate_quasilinear, sup_distance
from .steiner import steiner_areas_subdivision
from .tonelli import (
    DefectedFn1D,
    act_residual,
    essential_derivative_gap,
    generalized_variation_1d,
    tonelli_lower_bound,
    total_variation_1d,
    v_T,
)


class UsageError(Exception):
    """Bad input discovered after argument parsing (exit code 2)."""


class ComputationFailure(Exception):
    """A requested property did not hold (exit code 1)."""


ONEVAR_BASES = {
    "x": lambda t: t,
    "x(1-x)": lambda t: t * (1 - t),
    "step": lambda t: np.where(t > 0.5, 1.0, 0.0),
    "cantor": cantor,
}


def _field(text: str):
    try:
        return parse_descriptor(text)
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad field descriptor {text!r}: {exc}") from None


def _rect(text: str) -> OrientedRect:
    try:
        a, b, c, d = (float(v) for v in text.split(","))
        return OrientedRect(a, b, c, d)
    except ValueError as exc:
        raise UsageError(f"bad rectangle {text!r} (want a,b,c,d): {exc}") from None


def _defect(text: str) -> tuple[float, float]:
    try:
        p, v = text.split(":")
        return float(p), float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad defect {text!r} (want point:value)") from None


def _meta(out, **items) -> None:
    for k, v in items.items():
        out.write(f"# {k}={v}\n")


def _rows(out, header, rows) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _fmt(v) -> str:
    return repr(float(v))


# ---------------------------------------------------------------- subcommands

def cmd_area(args, out) -> int:
    f = _field(args.field)
    rect = _rect(args.rect) if args.rect else None
    if rect is not None and not f.domain.contains_rect(rect):
        raise UsageError(f"rectangle {args.rect!r} not inside the field domain {f.domain.bounds}")
    ladder = geocze_area(f, args.levels, args.panels, args.order, args.tol, rect)
    _meta(out, command="area", field=f.name, levels=args.levels, order=args.order, tol=args.tol,
          rect=(rect or f.domain).bounds)
    rows = []
    for lv in ladder.levels:
        row = [lv.level, lv.cells, _fmt(lv.G), _fmt(lv.delta)]
        if args.quasilinear:
            if rect is not None:
                raise UsageError("--quasilinear works on the full field domain only")
            row.append(_fmt(elementary_area(interpolate_quasilinear(f, lv.level))))
        rows.append(row)
    header = ["level", "cells", "G", "delta"] + (["a_quasilinear"] if args.quasilinear else [])
    _rows(out, header, rows)
    verdict = "CONVERGED" if ladder.converged else "NOT_CONVERGED"
    _meta(out, estimate=_fmt(ladder.estimate), converged_level=ladder.converged_level,
          monotone=ladder.is_monotone(), verdict=verdict)
    if args.require_converged and not ladder.converged:
        raise ComputationFailure(f"ladder for {f.name} did not converge by level {args.levels}")
    return 0


def cmd_lantern(args, out) -> int:
    if args.m is not None or args.n is not None:
        if args.m is None or args.n is None:
            raise UsageError("--m and --n go together")
        try:
            spec = LanternSpec(args.m, args.n)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        _meta(out, command="lantern", m=spec.m, n=spec.n)
        row = [spec.m, spec.n, _fmt(lantern_area(spec))]
        header = ["m", "n", "area"]
        if args.oracle:
            try:
                row.append(_fmt(lantern_vertex_oracle(spec)))
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            header.append("oracle")
        _rows(out, header, [row])
        return 0
    try:
        path = LanternPath(PathKind(args.path), args.steps, args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = lantern_limit(path)
    _meta(out, command="lantern", path=path.kind.value, steps=path.steps,
          **({"c": path.c} if path.kind is PathKind.PARABOLIC else {}))
    out.write(res.to_csv())
    if not res.divergent:
        _meta(out, spread=f"{res.spread:.3e}")
    if args.require_finite and res.divergent:
        raise ComputationFailure("path diverges")
    return 0


def cmd_tonelli(args, out) -> int:
    f = _field(args.field)
    rep = v_T(f, args.levels, args.panels, args.order)
    _meta(out, command="tonelli", field=f.name, levels=args.levels, panels=args.panels, order=args.order)
    out.write(rep.to_csv())
    _meta(out, divergent=rep.divergent)
    if args.lower_bound or args.act:
        _meta(out, tonelli_lower_bound=_fmt(tonelli_lower_bound(f)))
    if args.act:
        _meta(out, act_residual=_fmt(act_residual(f, args.act_level)), act_level=args.act_level)
    if args.require_bvt and rep.divergent:
        raise ComputationFailure(f"{f.name} is flagged as not BVT")
    return 0


def cmd_mollify(args, out) -> int:
    f = _field(args.field)
    sub = f.domain.centered_subrect(0.5)
    base_l1 = l1_norm(f)
    base_area = geocze_area(f, args.levels).estimate
    _meta(out, command="mollify", field=f.name, levels=args.levels, grid_level=args.grid_level,
          l1_f=_fmt(base_l1), area_f=_fmt(base_area))
    rows = []
    for h in args.h:
        try:
            fh = integral_mean(f, h, grid_level=args.grid_level)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        area_h = geocze_area(fh, args.levels).estimate
        area_sub = geocze_area(fh, args.levels, rect=sub).estimate if fh.domain.contains_rect(sub) else math.nan
        sup = sup_distance(fh, f, 128, sub) if fh.domain.contains_rect(sub) else math.nan
        rows.append([h, fh.mode, _fmt(l1_norm(fh)), _fmt(l1_distance(fh, f, fh.domain)), _fmt(sup),
                     _fmt(area_h), _fmt(area_sub)])
    _rows(out, ["h", "mode", "l1_f_h", "l1_f_h_minus_f", "sup_sub", "area_f_h", "area_f_h_sub"], rows)
    return 0


def cmd_steiner(args, out) -> int:
    f1, f2 = _field(args.f1), _field(args.f2)
    if f1.domain.bounds != f2.domain.bounds:
        raise UsageError(f"fields {args.f1!r} and {args.f2!r} live on different domains")
    _meta(out, command="steiner", f1=f1.name, f2=f2.name, levels=args.levels)
    rows, worst = [], math.inf
    for k in range(args.levels + 1):
        D = Subdivision.dyadic(f1.domain, k)
        g1, g2, gm = steiner_areas_subdivision(f1, f2, D, ladder_panels(k))
        gap = 0.5 * (g1 + g2) - gm
        worst = min(worst, gap)
        rows.append([k, _fmt(g1), _fmt(g2), _fmt(gm), _fmt(gap)])
    _rows(out, ["level", "G1", "G2", "G_mid", "gap"], rows)
    _meta(out, min_gap=_fmt(worst), verdict="HOLDS" if worst >= -1e-9 else "VIOLATED")
    if worst < -1e-9:
        raise ComputationFailure(f"Steiner gap {worst} below -1e-9")
    return 0


def cmd_onevar(args, out) -> int:
    try:
        fn = DefectedFn1D(ONEVAR_BASES[args.base], tuple(args.defect))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _meta(out, command="onevar", base=args.base, defects=len(fn.defects), levels=args.levels)
    _rows(out, ["quantity", "value"], [
        ["generalized_variation", _fmt(generalized_variation_1d(fn, args.levels))],
        ["pointwise_variation", _fmt(total_variation_1d(fn, (0.0, 1.0), args.levels))],
        ["essential_derivative_gap", _fmt(essential_derivative_gap(fn, levels=args.levels))],
    ])
    return 0


def cmd_verify(args, out) -> int:
    names = verify.suite_names() if args.suite == "all" else [args.suite]
    if args.threads > 1:
        with ThreadPoolExecutor(args.threads) as pool:
            results = list(pool.map(lambda n: verify.run_check(n, args.seed), names))
    else:
        results = [verify.run_check(n, args.seed) for n in names]
    _meta(out, command="verify", suite=args.suite, seed=args.seed)
    _rows(out, ["check", "verdict", "detail"],
          [[r.name, "PASS" if r.passed else "FAIL", r.detail] for r in results])
    passed = sum(r.passed for r in results)
    _meta(out, passed=f"{passed}/{len(results)}")
    if passed < len(results):
        raise ComputationFailure(f"{len(results) - passed} check(s) failed")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surfarea", description="Surface-area experiments for z = f(x, y).")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="CSV output path (default stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("area", parents=[common], help="Geöcze ladder of a field")
    a.add_argument("--field", required=True, help="descriptor, e.g. plane(1,2,0) or grid:path")
    a.add_argument("--levels", type=int, default=6)
    a.add_argument("--panels", type=int, default=None, help="edge panels (default: level dependent)")
    a.add_argument("--order", type=int, default=DEFAULT_ORDER)
    a.add_argument("--tol", type=float, default=DEFAULT_TOL)
    a.add_argument("--rect", help="sub-rectangle a,b,c,d")
    a.add_argument("--quasilinear", action="store_true", help="add the interpolant's elementary area")
    a.add_argument("--require-converged", action="store_true")
    a.set_defaults(run=cmd_area)

    ln = sub.add_parser("lantern", parents=[common], help="Schwarz lantern areas")
    ln.add_argument("--path", choices=[k.value for k in PathKind], default="diagonal")
    ln.add_argument("--steps", type=int, default=9)
    ln.add_argument("--c", type=float, default=1.0, help="parabolic path constant")
    ln.add_argument("--m", type=int)
    ln.add_argument("--n", type=int)
    ln.add_argument("--oracle", action="store_true", help="also sum explicit triangles")
    ln.add_argument("--require-finite", action="store_true")
    ln.set_defaults(run=cmd_lantern)

    t = sub.add_parser("tonelli", parents=[common], help="Tonelli variation report")
    t.add_argument("--field", required=True)
    t.add_argument("--levels", type=int, default=12)
    t.add_argument("--panels", type=int, default=8)
    t.add_argument("--order", type=int, default=8)
    t.add_argument("--lower-bound", action="store_true")
    t.add_argument("--act", action="store_true", help="report the ACT residual")
    t.add_argument("--act-level", type=int, default=7)
    t.add_argument("--require-bvt", action="store_true")
    t.set_defaults(run=cmd_tonelli)

    m = sub.add_parser("mollify", parents=[common], help="integral means f_h")
    m.add_argument("--field", required=True)
    m.add_argument("--h", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
    m.add_argument("--levels", type=int, default=5)
    m.add_argument("--grid-level", type=int, default=None, help="precomputed-grid mode")
    m.set_defaults(run=cmd_mollify)

    s = sub.add_parser("steiner", parents=[common], help="Steiner midpoint gaps per level")
    s.add_argument("--f1", required=True)
    s.add_argument("--f2", required=True)
    s.add_argument("--levels", type=int, default=8)
    s.set_defaults(run=cmd_steiner)

    o = sub.add_parser("onevar", parents=[common], help="1D generalized variation")
    o.add_argument("--base", choices=list(ONEVAR_BASES), default="cantor")
    o.add_argument("--defect", type=_defect, action="append", default=[], metavar="POINT:VALUE")
    o.add_argument("--levels", type=int, default=12)
    o.set_defaults(run=cmd_onevar)

    v = sub.add_parser("verify", parents=[common], help="run acceptance suites")
    v.add_argument("--suite", default="all", choices=["all"] + verify.suite_names())
    v.add_argument("--seed", type=int, default=42)
    v.set_defaults(run=cmd_verify)
    return p


def _check_ranges(args) -> None:
    for name in ("levels", "steps"):
        if getattr(args, name, 0) is not None and getattr(args, name, 0) < 0:
            raise UsageError(f"--{name} must be >= 0")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if getattr(args, "order", None) is not None and not 1 <= args.order <= 32:
        raise UsageError(f"--order {args.order} out of range 1..32")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    buf = io.StringIO()
    try:
        _check_ranges(args)
        code = args.run(args, buf)
    except UsageError as exc:
        print(f"surfarea: error: {exc}", file=sys.stderr)
        return 2
    except ComputationFailure as exc:
        code = 1
        _meta(buf, failure=str(exc))
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
