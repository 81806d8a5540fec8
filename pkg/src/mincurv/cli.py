"""Command line entry point: ``mincurv <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .catenoid_barrier import CatenoidProfile, comparison_signs, h_prime, height_profile, ode_residual, ratio_inequality
from .curvature_ledger import gauss_bonnet_end, total_curvature_multiple
from .end_model import EndData, trace_level_curves
from .errors import ConfigInvalidError, MincurvError
from .lift_engine import close_polygon, lift
from .metric_models import ConformalDiscMetric, CurvatureBounds, WarpedPolarMetric, disc_samples, verify_pinching
from .pipeline import load_config, run_pipeline
from .report_io import emit_svg, read_bc_inner, read_json, read_xi_csv, write_csv, write_json, write_xi_csv
from .sinh_gordon import AnnulusGrid, SolverConfig, solve_xi

__all__ = ["build_parser", "main"]


def _end(path) -> EndData:
    return EndData.from_dict(read_json(path))


def cmd_metric_check(args) -> int:
    cfg = read_json(args.config)
    metric = ConformalDiscMetric.from_dict(cfg["alpha"])
    bounds = CurvatureBounds(cfg["bounds"]["a"], cfg["bounds"]["b"])
    rep = verify_pinching(metric, bounds, disc_samples(args.n, args.r_max), args.h)
    if args.out:
        write_csv(args.out, ("z_re", "z_im", "K", "pass"), rep.rows())
    print(f"{'PASS' if rep.passed else 'FAIL'} violations={len(rep.violations)} samples={len(rep.samples)}")
    return 0 if rep.passed else 1


def cmd_end_solve(args) -> int:
    end = _end(args.end)
    n_r, n_theta = (int(v) for v in args.grid.split(","))
    grid = AnnulusGrid(end.R, args.Rout, n_r, n_theta)
    bc = read_bc_inner(args.bc_inner, grid.theta) if args.bc_inner else args.bc_value
    cfg = SolverConfig(tol=args.tol, damping=args.damping, bc_inner=bc, linear_solver=args.linear_solver)
    xi = solve_xi(end, args.K, grid, cfg)
    write_xi_csv(args.out, xi)
    print(f"converged iterations={xi.iterations} residual={xi.residual_norm:.3e}")
    return 0


def cmd_lift(args) -> int:
    end = _end(args.end)
    poly = close_polygon(lift(end, args.C, args.step), end)
    write_csv(args.out, ("t", "z_re", "z_im", "sector_k", "arc_class"), poly.rows())
    if args.svg:
        emit_svg(poly, trace_level_curves(end), args.svg)
    print(f"vertices={poly.n_vertices} reflex={poly.reflex_count} simple={poly.is_simple()}")
    return 0


def cmd_gauss_bonnet(args) -> int:
    end = _end(args.end)
    xi = read_xi_csv(args.xi, end)
    rep = gauss_bonnet_end(end, xi, args.C, args.step)
    write_json(args.out, rep.to_dict())
    print(f"defect={rep.defect:.6e} target={rep.target:.12g}")
    return 0


def cmd_formula(args) -> int:
    ms = [int(m) for m in args.ends.split(",") if m.strip()]
    q = total_curvature_multiple(args.genus, len(ms), ms)
    print(q)
    print(f"total curvature = {q} * 2pi = {2 * math.pi * q:.12g}")
    return 0


def cmd_catenoid(args) -> int:
    p = CatenoidProfile(args.A, args.k)
    s = np.linspace(p.R_neck + args.offset, args.smax, args.n)
    res = np.abs(ode_residual(p, s))
    rows = [(si, height_profile(p, si), h_prime(p, si), ri) for si, ri in zip(s, res)]
    write_csv(args.out, ("s", "h", "h_prime", "ode_residual"), rows)
    print(f"R_neck={p.R_neck:.12g} max_ode_residual={res.max():.3e}")
    return 0


def cmd_compare(args) -> int:
    G = WarpedPolarMetric.from_dict(read_json(args.G))
    signs = comparison_signs(G, (args.k1, args.k2), args.A, n=args.n)
    ratio = ratio_inequality(G, args.k1, args.k2, n=args.n)
    summary = {
        "k1_outward": signs.k1_outward,
        "k2_inward": signs.k2_inward,
        "boundary": signs.boundary,
        "ratio_inequality": ratio.passed,
        "ratio_min_margin": ratio.min_margin,
    }
    print(json.dumps(summary, sort_keys=True))
    return 0 if signs.passed and ratio.passed else 1


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.out:
        cfg.output_dir = Path(args.out)
    man = run_pipeline(cfg)
    for row in man.acceptance:
        print(f"{'PASS' if row['passed'] else 'FAIL'}  {row['check']}")
    print(f"manifest: {cfg.output_dir / 'manifest.json'}")
    return 0 if man.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mincurv", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metric-check", help="pinching check of a conformal disc metric")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, default=21)
    p.add_argument("--r-max", type=float, default=0.95)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_metric_check)

    p = sub.add_parser("end-solve", help="solve the sinh-Gordon field on an end annulus")
    p.add_argument("--end", required=True)
    p.add_argument("--grid", required=True, help="n_r,n_theta")
    p.add_argument("--Rout", type=float, required=True)
    p.add_argument("--bc-inner", help="CSV of (theta, value) rows")
    p.add_argument("--bc-value", type=float, default=0.0, help="constant inner data without --bc-inner")
    p.add_argument("--K", type=float, default=-1.0, help="constant ambient curvature K_M < 0")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--damping", type=float, default=0.7)
    p.add_argument("--linear-solver", choices=("direct", "red-black"), default="direct")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_end_solve)

    p = sub.add_parser("lift", help="generalized lift and polygon P(C)")
    p.add_argument("--end", required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    p.set_defaults(fn=cmd_lift)

    p = sub.add_parser("gauss-bonnet", help="Gauss-Bonnet ledger for one end")
    p.add_argument("--end", required=True)
    p.add_argument("--xi", required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gauss_bonnet)

    p = sub.add_parser("formula", help="total curvature as an integer multiple of 2pi")
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--ends", required=True, help="comma-separated end orders m1,m2,...")
    p.set_defaults(fn=cmd_formula)

    p = sub.add_parser("catenoid", help="catenoid height profile table")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--smax", type=float, required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--offset", type=float, default=0.05, help="first sample is R_neck + offset")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_catenoid)

    p = sub.add_parser("compare", help="catenoid comparison signs and ratio inequality")
    p.add_argument("--G", required=True, help="JSON warped metric description")
    p.add_argument("--k1", type=float, required=True)
    p.add_argument("--k2", type=float, required=True)
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--n", type=int, default=1000)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("run", help="full pipeline from a JSON experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the output directory")
    p.set_defaults(fn=cmd_run)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigInvalidError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 2
    except MincurvError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 3
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
