"""Command-line entry point.

Exit codes: 0 success, 1 domain failure, 2 input failure, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import warnings

import numpy as np

from . import r3
from .bowen import DEFAULT_TOL, NoPositiveRootError, det_potential, dim_bounds_affine, lower_potential, upper_potential
from .linalg import min_quasiregular_K
from .model import AffineSystem, PerturbedFamily, SpecSyntaxError, SpecValidationError, family_at, validate
from .oracle import box_count_dim, chaos_game, default_scales
from .perturbation import default_grid, dimension_sweep, fit_expansion, UnreliableExpansionError
from .pressure import CountableSystem, NonConvergenceError, pressure_cylinder, pressure_spectral, pressure_truncated
from .specfile import load_spec

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _emit(rows, header, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    text = buf.getvalue()
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(cfg):
    if not cfg.spec:
        raise InputError("--spec is required")
    return load_spec(cfg.spec)


def _system(cfg) -> AffineSystem:
    obj = _load(cfg)
    return obj.base if isinstance(obj, PerturbedFamily) else obj


def _family(cfg) -> PerturbedFamily:
    obj = _load(cfg)
    if isinstance(obj, AffineSystem):
        return PerturbedFamily(0, obj, {})
    return obj


def _grid(cfg, fam=None):
    grid = default_grid(cfg.eps_start, cfg.eps_levels)
    if fam is not None:
        valid = fam.validity_prefix(grid)
        if len(valid) < len(grid):
            raise SpecValidationError(
                f"grid leaves the validity range at eps={grid[len(valid)]:g} (limit {fam.eps_max:g})"
            )
    return grid


def cmd_validate(cfg) -> int:
    sys_ = _system(cfg)
    rep = validate(sys_, cfg.depth)
    print(f"system: {sys_.name}")
    print(f"dimension: {sys_.dim}  vertices: {len(sys_.graph.vertices)}  edges: {len(sys_.graph.edges)}")
    print(f"contraction ratio r: {rep.ratio:.12g}")
    print(f"seed interiors: {'ok' if rep.seed_interiors else 'FAIL'}")
    print(f"seeds inside domains: {'ok' if rep.seed_in_domain else 'FAIL'}")
    print(f"image inclusion: {'ok' if rep.image_inclusion else 'FAIL'}")
    print(f"strong separation at depth {rep.depth}: {'pass' if rep.ssc else 'fail'}"
          f" (min separation {rep.min_separation:.6g})")
    for e, e2 in rep.ssc_offenders:
        print(f"  touching or overlapping: {e} {e2}")
    print(f"open set condition: {'pass' if rep.osc else 'fail'}")
    for msg in rep.failures:
        print(f"FAIL: {msg}")
    return EXIT_OK if rep.hard_ok else EXIT_DOMAIN


def cmd_pressure(cfg) -> int:
    sys_ = _system(cfg)
    pots = {"upper": upper_potential, "lower": lower_potential, "det": det_potential}
    phi = pots[cfg.potential](sys_)
    g = sys_.graph
    vals = {e: cfg.s * v for e, v in phi.items()}
    rows = [(cfg.potential, cfg.s, "spectral", 0, pressure_spectral(g, vals).value)]
    if cfg.cylinder_n:
        rows.append((cfg.potential, cfg.s, "cylinder", cfg.cylinder_n, pressure_cylinder(g, vals, cfg.cylinder_n).value))
    if sys_.tail is not None:
        cs = CountableSystem(g, phi, sys_.tail)
        tr = pressure_truncated(cs, cfg.s, [10, 100, 1000, 10000])
        for lvl, pv in zip(tr.levels, tr.values):
            rows.append((cfg.potential, cfg.s, "truncated", lvl, pv.value))
        if tr.diverged:
            rows.append((cfg.potential, cfg.s, "truncated", "inf", math.inf))
    _emit(rows, ["potential", "s", "method", "level", "pressure"], cfg.out)
    return EXIT_OK


def cmd_dim_bounds(cfg) -> int:
    sys_ = _system(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = dim_bounds_affine(sys_, tol=cfg.tol, conformal_tol=cfg.conformal_tol, depth=cfg.depth)
    row = (sys_.name, rep.lower, rep.upper, rep.det_bracket[0], rep.det_bracket[1], rep.K, ";".join(rep.flags))
    _emit([row], ["system", "s_lower", "s_upper", "det_lo", "det_hi", "K", "flags"], cfg.out)
    return EXIT_OK


def _fit_summary(fit) -> list:
    lines = [f"# fit method={fit.method} order={fit.order}"]
    for k, c in enumerate(fit.coefficients):
        lines.append(f"# s{k} = {c:.12g}")
    lines.append(f"# remainder_slope = {fit.remainder_slope:.6g}")
    lines.append(f"# remainder_scale = {fit.remainder_scale:.6g}")
    lines.append(f"# bracket_width_slope = {fit.width_slope:.6g}")
    return lines


def cmd_perturb(cfg) -> int:
    fam = _family(cfg)
    grid = _grid(cfg, fam)
    rows = dimension_sweep(fam, grid, tol=min(cfg.tol, 1e-12), workers=cfg.workers)
    _emit([(r.eps, r.lower, r.upper, r.K) for r in rows], ["eps", "s_lower", "s_upper", "K"], cfg.out)
    order = fam.order if cfg.order is None else cfg.order
    try:
        fit = fit_expansion(fam, order, grid, method=cfg.method, tol=min(cfg.tol, 1e-12), sweep=rows)
    except UnreliableExpansionError as exc:
        print(f"# {exc}")
        return EXIT_DOMAIN
    print("\n".join(_fit_summary(fit)))
    return EXIT_OK


def cmd_boxcount(cfg) -> int:
    sys_ = _system(cfg)
    cloud = chaos_game(sys_, cfg.points, seed=cfg.seed)
    if cfg.dump:
        cloud.to_csv(cfg.dump)
    anchor = np.min([b.low for b in sys_.seed.values()], axis=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = box_count_dim(cloud, default_scales(sys_, cfg.levels), anchor=anchor)
    _emit(list(zip(rep.scales, rep.counts)), ["scale", "count"], cfg.out)
    print(f"# slope = {rep.slope:.6g}  stderr = {rep.stderr:.3g}  points = {len(cloud)}  seed = {cfg.seed}")
    for note in rep.warnings:
        print(f"# warning: {note}")
    return EXIT_OK


def cmd_example_r3(cfg) -> int:
    fam = r3.r3_family(cfg.r)
    grid = _grid(cfg, fam)
    rows = dimension_sweep(fam, grid, tol=min(cfg.tol, 1e-12), workers=cfg.workers)
    table = []
    for row in rows:
        kc = float(r3.closed_form_K(row.eps))
        km = min_quasiregular_K(r3.r3_matrix(row.eps, cfg.r))
        table.append((row.eps, kc, km, row.lower, row.upper))
    _emit(table, ["eps", "K_closed_form", "K_minimal", "s_lower", "s_upper"], cfg.out)
    fit = fit_expansion(fam, 1, grid, tol=min(cfg.tol, 1e-12), sweep=rows)
    print(f"# closed-form K(0) = {float(r3.closed_form_K(0.0)):.15g}")
    for h in (1e-2, 5e-3):
        print(f"# second-order coefficient of K, h={h:g}: {r3.second_order_coefficient(h=h):.8f} (9/16 = 0.5625)")
    print("\n".join(_fit_summary(fit)))
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "pressure": cmd_pressure,
    "dim-bounds": cmd_dim_bounds,
    "perturb": cmd_perturb,
    "boxcount": cmd_boxcount,
    "example-r3": cmd_example_r3,
}


def build_parser() -> argparse.ArgumentParser:
    env_workers = int(os.environ.get("GIFS_DIM_WORKERS", "1") or 1)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="system description file")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="root tolerance")
    common.add_argument("--conformal-tol", type=float, default=1e-9)
    common.add_argument("--eps-start", type=float, default=0.1)
    common.add_argument("--eps-levels", type=int, default=11)
    common.add_argument("--order", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--points", type=int, default=100_000)
    common.add_argument("--out", help="write CSV here instead of standard output")
    common.add_argument("--workers", type=int, default=env_workers)
    common.add_argument("--depth", type=int, default=1, help="word depth for separation checks")

    p = argparse.ArgumentParser(prog="gifsdim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common])
    pp = sub.add_parser("pressure", parents=[common])
    pp.add_argument("--s", type=float, default=1.0)
    pp.add_argument("--potential", choices=["upper", "lower", "det"], default="upper")
    pp.add_argument("--cylinder-n", type=int, default=0)
    sub.add_parser("dim-bounds", parents=[common])
    pt = sub.add_parser("perturb", parents=[common])
    pt.add_argument("--method", choices=["richardson", "polyfit"], default="richardson")
    bc = sub.add_parser("boxcount", parents=[common])
    bc.add_argument("--levels", type=int, default=8)
    bc.add_argument("--dump", help="write the point cloud as CSV")
    ex = sub.add_parser("example-r3", parents=[common])
    ex.add_argument("--r", type=float, default=0.4)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        cfg = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if cfg.tol <= 0 or cfg.conformal_tol <= 0:
        print("error: tolerances must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[cfg.command](cfg)
    except (SpecSyntaxError, InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SpecValidationError, NoPositiveRootError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
