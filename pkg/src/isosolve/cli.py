"""Command-line interface: check, solve, verify, catalog.

Exit codes: 0 success / verdict true / verification pass; 1 negative
verdict, verification failure, rank deficiency, inadmissible or non-free
map; 2 parse, I/O or grid-mismatch errors.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import catalog as cat
from .errors import (
    ArityError,
    DomainError,
    ExpressionSyntaxError,
    GridMismatchError,
    IsosolveError,
    NotAdmissibleError,
    NotFreeError,
    RankDeficientError,
    SignAmbiguousError,
    TransversalityLostError,
    WrongShapeError,
)
from .fieldfile import make_field, read_field, write_field
from .grid import Grid, n_pairs
from .jetcalc import expression_field, parse_map_spec
from .kernelfield import admissibility
from .linsolve import SolverOptions, default_solve_tol, solve_free, solve_linearized
from .verify import richardson_check, verify_solution

_USAGE_ERRORS = (
    ExpressionSyntaxError,
    ArityError,
    DomainError,
    GridMismatchError,
    WrongShapeError,
    OSError,
    json.JSONDecodeError,
    ValueError,
    KeyError,
)
_VERDICT_ERRORS = (
    RankDeficientError,
    NotAdmissibleError,
    NotFreeError,
    TransversalityLostError,
    SignAmbiguousError,
)


def _add_map_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--map", help="map-spec file (m=..,q=..; expr; ...)")
    src.add_argument("--catalog", help="built-in catalog entry name")


def _add_grid_args(p):
    p.add_argument("--grid", help="points per axis, e.g. 33,33")
    p.add_argument("--bounds", help="per-axis bounds a1,b1,a2,b2,...")


def _add_tol_args(p):
    p.add_argument("--rank-tol", type=float, default=1e-8)
    p.add_argument("--adm-tol", type=float, default=1e-6)
    p.add_argument("--solve-tol", type=float, default=None)
    p.add_argument("--alpha0", type=int, default=None,
                   help="override the marching coordinate (1-based)")
    p.add_argument("--substep", type=float, default=1.0,
                   help="characteristic sub-step as a fraction of the grid spacing")


def _add_dg_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--dg", help="symtensor field file with the metric perturbation")
    src.add_argument("--dg-expr",
                     help="m(m+1)/2 expressions, (a<=b) order, ';'-separated")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isosolve",
        description="Constructive inversion of the linearized pullback-metric "
        "operator at the critical target dimension.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="admissibility check of a map")
    _add_map_args(p)
    _add_grid_args(p)
    _add_tol_args(p)
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="JSON report on stdout")

    p = sub.add_parser("solve", help="solve the linearized system for delta f")
    _add_map_args(p)
    _add_grid_args(p)
    _add_tol_args(p)
    _add_dg_args(p)
    p.add_argument("--out", default="df.json", help="delta f field file (vector)")
    p.add_argument("--out-h", default=None,
                   help="scalar h field file (critical branch; default <out>_h.json)")
    p.add_argument("--json", action="store_true", help="JSON report on stdout")

    p = sub.add_parser("verify", help="verify a delta f field against delta g")
    _add_map_args(p)
    _add_tol_args(p)
    _add_dg_args(p)
    p.add_argument("--df", required=True, help="delta f field file")
    p.add_argument("--tol", type=float, default=None,
                   help="pass threshold (default 50 h^2 max(|dg|,1))")
    p.add_argument("--richardson", action="store_true",
                   help="also report nonlinear quadratic-defect ratios")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--json", action="store_true", help="JSON report on stdout")

    p = sub.add_parser("catalog", help="list or emit built-in examples")
    action = p.add_mutually_exclusive_group(required=True)
    action.add_argument("--list", action="store_true")
    action.add_argument("--emit", metavar="NAME")
    p.add_argument("--dir", default=".", help="output directory for --emit")
    return parser


def _load_spec(args):
    if args.catalog:
        entry = cat.get(args.catalog)
        return entry.spec(), entry
    text = Path(args.map).read_text(encoding="utf-8")
    return parse_map_spec(text), None


def _resolve_grid(args, spec, entry):
    default = entry.grid if entry is not None else None
    if args.grid is None and args.bounds is None and default is not None:
        return default
    m = spec.m
    if args.grid is not None:
        shape = tuple(int(s) for s in args.grid.split(","))
        if len(shape) == 1:
            shape = shape * m
    elif default is not None:
        shape = default.shape
    else:
        shape = (33,) * m
    if args.bounds is not None:
        vals = [float(s) for s in args.bounds.split(",")]
        if len(vals) != 2 * m:
            raise ValueError(f"--bounds needs {2 * m} numbers for m={m}")
        bounds = tuple((vals[2 * i], vals[2 * i + 1]) for i in range(m))
    elif default is not None:
        bounds = default.bounds
    else:
        bounds = ((-1.0, 1.0),) * m
    if len(shape) != m:
        raise ValueError(f"--grid needs {m} counts for m={m}")
    return Grid(bounds=bounds, shape=shape)


def _options(args):
    return SolverOptions(
        rank_tol=args.rank_tol,
        adm_tol=args.adm_tol,
        solve_tol=args.solve_tol,
        alpha0_override=args.alpha0,
        substep_factor=args.substep,
    )


def _load_dg(args, spec, grid, entry):
    if args.dg:
        ff = read_field(args.dg)
        if ff.kind != "symtensor":
            raise ValueError(f"--dg expects a symtensor field, got {ff.kind!r}")
        if not ff.grid.same_as(grid):
            raise GridMismatchError("--dg field grid differs from the run grid")
        return ff.data
    if args.dg_expr:
        exprs = [e for e in (s.strip() for s in args.dg_expr.split(";")) if e]
    elif entry is not None:
        exprs = list(entry.dg_exprs)
    else:
        raise ValueError("need --dg or --dg-expr (no catalog default available)")
    if len(exprs) != n_pairs(spec.m):
        raise ArityError(
            f"delta g needs {n_pairs(spec.m)} expressions for m={spec.m}, "
            f"got {len(exprs)}"
        )
    return expression_field(exprs, grid)


def _emit_report(report_dict, text_lines, args, out=None):
    if getattr(args, "json", False):
        print(json.dumps(report_dict, indent=2))
    else:
        for line in text_lines:
            print(line)
    if out:
        Path(out).write_text(json.dumps(report_dict, indent=2) + "\n", encoding="utf-8")


def cmd_check(args):
    spec, entry = _load_spec(args)
    grid = _resolve_grid(args, spec, entry)
    rep = admissibility(
        spec,
        grid,
        rank_tol=args.rank_tol,
        adm_tol=args.adm_tol,
        alpha0_override=args.alpha0,
    )
    lines = [
        f"map: m={spec.m}, q={spec.q} (critical q = {spec.critical_q})",
        f"grid: {'x'.join(map(str, grid.shape))} on {list(grid.bounds)}",
        f"full rank: {rep.full_rank_ok} (min sigma ratio {rep.min_sigma_ratio:.3e} "
        f"at node {rep.worst_node})",
        f"alpha0: {rep.alpha0}  min transversality: {rep.min_transversality:.6g}",
        f"verdict: {'ADMISSIBLE' if rep.verdict else 'NOT ADMISSIBLE'}",
    ]
    if rep.failure:
        lines.append(f"reason: {rep.failure}")
    _emit_report(rep.to_dict(), lines, args, out=args.out)
    return 0 if rep.verdict else 1


def cmd_solve(args):
    spec, entry = _load_spec(args)
    grid = _resolve_grid(args, spec, entry)
    dg = _load_dg(args, spec, grid, entry)
    opts = _options(args)
    if spec.q >= spec.n_equations:
        dff, rep = solve_free(spec, dg, grid, opts)
    elif spec.q == spec.critical_q:
        dff, rep = solve_linearized(spec, dg, grid, opts)
    else:
        raise NotAdmissibleError(
            f"q = {spec.q} below the critical dimension {spec.critical_q}; "
            "kernel dimension exceeds one"
        )
    out = Path(args.out)
    write_field(out, make_field("vector", grid, dff.df, q=spec.q,
                                components=[f"df_{i + 1}" for i in range(spec.q)]))
    h_path = None
    if rep.branch == "critical":
        h_path = args.out_h or str(out.with_name(out.stem + "_h.json"))
        write_field(h_path, make_field("scalar", grid, rep.extras["h"],
                                       components=["h"]))
    doc = rep.to_dict()
    doc["df_file"] = str(out)
    doc["h_file"] = h_path
    lines = [
        f"branch: {rep.branch}" + (f"  alpha0: {rep.alpha0}" if rep.alpha0 else ""),
        f"max pointwise residual: {rep.max_residual:.3e} "
        f"(solve_tol {rep.solve_tol:.3e}, consistent: {rep.consistent})",
        f"characteristics leaving the box: {rep.exited_fraction:.1%}",
        f"wrote {out}" + (f" and {h_path}" if h_path else ""),
    ]
    _emit_report(doc, lines, args, out=None)
    return 0


def cmd_verify(args):
    spec, entry = _load_spec(args)
    ff = read_field(args.df)
    if ff.kind != "vector":
        raise ValueError(f"--df expects a vector field, got {ff.kind!r}")
    grid = ff.grid
    if ff.data.shape[-1] != spec.q:
        raise GridMismatchError(
            f"delta f has {ff.data.shape[-1]} components but the map has q={spec.q}"
        )
    dg = _load_dg(args, spec, grid, entry)
    tol = args.tol if args.tol is not None else default_solve_tol(grid, dg)
    rep = verify_solution(spec, ff.data, dg, grid, tol)
    if args.richardson:
        rich = richardson_check(spec, ff.data, dg, grid)
        rep = type(rep)(**{**rep.__dict__, "richardson": rich})
    lines = [
        f"linearized residual: inf {rep.lin_residual_inf:.3e}, "
        f"l2 {rep.lin_residual_l2:.3e} (interior nodes)",
        f"tolerance: {rep.tol:.3e}",
        f"result: {'PASS' if rep.passed else 'FAIL'}",
    ]
    if rep.richardson is not None:
        r = rep.richardson
        if r.degenerate:
            lines.append("richardson: degenerate (errors at rounding level)")
        else:
            lines.append(
                "richardson errors: "
                + ", ".join(f"{e:.3e}" for e in r.errors)
                + "  ratios: "
                + ", ".join(f"{x:.2f}" for x in r.ratios)
            )
    _emit_report(rep.to_dict(), lines, args, out=args.out)
    return 0 if rep.passed else 1


def cmd_catalog(args):
    if args.list:
        for entry in cat.entries():
            verdict = "admissible" if entry.expected_verdict else "rejected"
            print(f"{entry.name:16s} {verdict:11s} {entry.note}")
        return 0
    entry = cat.get(args.emit)
    outdir = Path(args.dir)
    outdir.mkdir(parents=True, exist_ok=True)
    map_path = outdir / f"{entry.name}.map"
    map_path.write_text(entry.spec_text + "\n", encoding="utf-8")
    dg_path = outdir / f"{entry.name}.dg.json"
    dg = expression_field(list(entry.dg_exprs), entry.grid)
    write_field(dg_path, make_field("symtensor", entry.grid, dg))
    print(f"wrote {map_path} and {dg_path}")
    print(
        f"try: isosolve solve --map {map_path} --dg {dg_path} "
        f"--grid {','.join(map(str, entry.grid.shape))} "
        f"--bounds {','.join(f'{a:g},{b:g}' for a, b in entry.grid.bounds)}"
    )
    return 0


_COMMANDS = {
    "check": cmd_check,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "catalog": cmd_catalog,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _VERDICT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IsosolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
