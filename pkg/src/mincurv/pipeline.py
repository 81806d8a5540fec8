"""Experiment configs and the end-to-end pipeline.

Config files are JSON objects with ``"schema_version": 1``.  Unknown keys
are rejected at every level.  A run writes its artifacts and a
``manifest.json`` into the output directory.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .catenoid_barrier import CatenoidProfile, comparison_signs, h_prime, height_profile, ode_residual, ratio_inequality
from .curvature_ledger import gauss_bonnet_end, total_curvature_multiple
from .end_model import EndData, trace_level_curves
from .errors import ConfigInvalidError, MincurvError, StageFailedError
from .lift_engine import close_polygon, lift
from .metric_models import ConformalDiscMetric, CurvatureBounds, WarpedPolarMetric, disc_samples, verify_pinching
from .report_io import emit_svg, read_bc_inner, write_csv, write_json, write_xi_csv
from .sinh_gordon import AnnulusGrid, SolverConfig, decay_fit, gradient_decay_check, solve_xi, zero_field

__all__ = ["ExperimentConfig", "RunManifest", "load_config", "parse_config", "run_pipeline", "worker_count"]

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "schema_version", "name", "metric", "ends", "grid", "solver", "C_schedule", "step",
    "formula", "catenoid", "compare", "checks", "output_dir", "seed",
}
_SUB_KEYS = {
    "metric": {"alpha", "bounds", "n", "r_max", "h"},
    "grid": {"n_r", "n_theta", "R_out"},
    "solver": {"K_M", "bc_inner", "bc_outer", "tol", "max_iter", "damping", "linear_solver", "zero_field"},
    "catenoid": {"A", "k", "smax", "n"},
    "compare": {"G", "k1", "k2", "A", "n"},
    "checks": {"gb_defect_max", "kappa_final_max", "decay_r2_min", "catenoid_residual_max"},
}
_FORMULA_KEYS = {"g", "n", "ms", "expected_multiple"}


def worker_count() -> int:
    """Thread cap from MINCURV_THREADS, else min(4, cpu count)."""
    env = os.environ.get("MINCURV_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigInvalidError(f"MINCURV_THREADS={env!r} is not an integer") from exc
        return max(1, n)
    return max(1, min(4, os.cpu_count() or 1))


@dataclass
class ExperimentConfig:
    raw: Dict[str, Any]
    base_dir: Path
    ends: List[EndData]
    C_schedule: List[float]
    output_dir: Path
    seed: int

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def section(self, name: str) -> Optional[dict]:
        return self.raw.get(name)


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigInvalidError(f"{where} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigInvalidError(f"unknown keys in {where}: {sorted(unknown)}")


def parse_config(text: str, base_dir=".") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        err = ConfigInvalidError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
        err.line, err.column = exc.lineno, exc.colno
        raise err from exc
    _reject_unknown(raw, _TOP_KEYS, "config")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigInvalidError(f"schema_version must be {SCHEMA_VERSION}")
    for key, allowed in _SUB_KEYS.items():
        if key in raw:
            _reject_unknown(raw[key], allowed, key)
    for i, item in enumerate(raw.get("formula", [])):
        _reject_unknown(item, _FORMULA_KEYS, f"formula[{i}]")
    base_dir = Path(base_dir)
    try:
        ends = [EndData.from_dict(e) for e in raw.get("ends", [])]
    except (MincurvError, KeyError, TypeError) as exc:
        raise ConfigInvalidError(f"bad end entry: {exc}") from exc
    sched = [float(c) for c in raw.get("C_schedule", [])]
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ConfigInvalidError("C_schedule must be strictly increasing")
    if ends and not sched:
        raise ConfigInvalidError("ends need a C_schedule")
    if ends and "grid" not in raw:
        raise ConfigInvalidError("ends need a grid section")
    bc = raw.get("solver", {}).get("bc_inner")
    if isinstance(bc, str) and not (base_dir / bc).is_file():
        raise ConfigInvalidError(f"bc_inner file {bc!r} does not exist")
    out = Path(raw.get("output_dir", "mincurv_out"))
    if not out.is_absolute():
        out = base_dir / out
    return ExperimentConfig(raw, base_dir, ends, sched, out, int(raw.get("seed", 0)))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalidError(f"config file {str(path)!r} does not exist")
    return parse_config(path.read_text(), path.parent)


@dataclass
class RunManifest:
    config_hash: str
    version: str
    stages: List[dict] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)
    acceptance: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row["passed"] for row in self.acceptance) and all(
            st["status"] == "OK" for st in self.stages
        )

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "stages": self.stages,
            "artifacts": self.artifacts,
            "acceptance": self.acceptance,
            "passed": self.passed,
        }


class _Runner:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = cfg.output_dir
        self.manifest = RunManifest(cfg.config_hash, __version__)
        self.failed = set()

    def artifact(self, path: Path):
        rel = str(path.relative_to(self.out))
        self.manifest.artifacts[rel] = hashlib.sha256(path.read_bytes()).hexdigest()

    def check(self, name, value, threshold, passed):
        self.manifest.acceptance.append(
            {"check": name, "value": value, "threshold": threshold, "passed": bool(passed)}
        )

    def stage(self, name: str, fn: Callable, needs=()):
        blocked = [n for n in needs if n in self.failed]
        if blocked:
            self.failed.add(name)
            self.manifest.stages.append({"stage": name, "status": "SKIPPED", "blocked_by": blocked})
            self.check(f"stage:{name}", "SKIPPED", None, False)
            return None
        t0 = time.perf_counter()
        try:
            result = fn()
        except Exception as exc:  # recorded, never re-raised
            err = StageFailedError(name, exc)
            self.failed.add(name)
            self.manifest.stages.append(
                {
                    "stage": name,
                    "status": "FAILED",
                    "code": getattr(exc, "code", type(exc).__name__),
                    "error": str(err),
                    "wall_time": time.perf_counter() - t0,
                }
            )
            self.check(f"stage:{name}", "FAILED", None, False)
            return None
        self.manifest.stages.append({"stage": name, "status": "OK", "wall_time": time.perf_counter() - t0})
        return result

    # -- stages -------------------------------------------------------------

    def metric(self):
        sec = self.cfg.section("metric")
        metric = ConformalDiscMetric.from_dict(sec["alpha"])
        bounds = CurvatureBounds(sec["bounds"]["a"], sec["bounds"]["b"])
        rep = verify_pinching(
            metric, bounds, disc_samples(sec.get("n", 21), sec.get("r_max", 0.95)), sec.get("h", 1e-3)
        )
        self.artifact(write_csv(self.out / "pinching.csv", ("z_re", "z_im", "K", "pass"), rep.rows()))
        self.check("pinching", len(rep.violations), 0, rep.passed)

    def formula(self):
        rows = []
        for i, item in enumerate(self.cfg.section("formula")):
            q = total_curvature_multiple(item["g"], item["n"], item["ms"])
            rows.append((item["g"], item["n"], " ".join(map(str, item["ms"])), q, 2 * math.pi * q))
            if "expected_multiple" in item:
                self.check(f"formula[{i}]", q, item["expected_multiple"], q == item["expected_multiple"])
        self.artifact(write_csv(self.out / "formula.csv", ("g", "n", "ms", "multiple", "total_curvature"), rows))

    def solve(self, j: int, end: EndData):
        g = self.cfg.section("grid")
        sol = self.cfg.section("solver") or {}
        grid = AnnulusGrid(end.R, float(g["R_out"]), int(g["n_r"]), int(g["n_theta"]))
        if sol.get("zero_field", False):
            xi = zero_field(grid, end)
        else:
            bc = sol.get("bc_inner", 0.0)
            if isinstance(bc, str):
                bc = read_bc_inner(self.cfg.base_dir / bc, grid.theta)
            scfg = SolverConfig(
                tol=sol.get("tol", 1e-10),
                max_iter=sol.get("max_iter", 60),
                damping=sol.get("damping", 0.7),
                bc_inner=bc,
                bc_outer=sol.get("bc_outer", 0.0),
                linear_solver=sol.get("linear_solver", "direct"),
            )
            xi = solve_xi(end, sol.get("K_M", -1.0), grid, scfg)
            r2_min = (self.cfg.section("checks") or {}).get("decay_r2_min")
            if r2_min is not None:
                fit = decay_fit(xi)
                gfit = gradient_decay_check(xi)
                self.check(f"end[{j}]:decay", fit.r2, r2_min, fit.c1 > 0 and fit.r2 > r2_min)
                self.check(f"end[{j}]:gradient_decay", gfit.slope, 0.0, gfit.slope < 0)
        self.artifact(write_xi_csv(self.out / f"xi_{j}.csv", xi))
        return xi

    def lifts(self, j: int, end: EndData):
        step = float(self.cfg.raw.get("step", 0.05))
        curves = trace_level_curves(end)

        def one(C):
            return close_polygon(lift(end, C, step), end)

        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            polys = list(pool.map(one, self.cfg.C_schedule))
        for C, poly in zip(self.cfg.C_schedule, polys):
            tag = f"{j}_C{C:g}"
            self.artifact(
                write_csv(self.out / f"polygon_{tag}.csv", ("t", "z_re", "z_im", "sector_k", "arc_class"), poly.rows())
            )
            self.artifact(emit_svg(poly, curves, self.out / f"polygon_{tag}.svg"))
        return polys

    def ledger(self, j: int, end: EndData, xi, polys):
        checks = self.cfg.section("checks") or {}
        step = float(self.cfg.raw.get("step", 0.05))

        def one(args):
            C, poly = args
            return gauss_bonnet_end(end, xi, C, step, polygon=poly)

        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            reps = list(pool.map(one, zip(self.cfg.C_schedule, polys)))
        kappas = []
        for C, rep in zip(self.cfg.C_schedule, reps):
            self.artifact(write_json(self.out / f"gauss_bonnet_{j}_C{C:g}.json", rep.to_dict()))
            kappas.append(rep.abs_kappa_total)
            if "gb_defect_max" in checks:
                lim = checks["gb_defect_max"]
                self.check(f"end[{j}]:C={C:g}:gb_defect", abs(rep.defect), lim, abs(rep.defect) < lim)
        if "kappa_final_max" in checks and len(kappas) >= 2:
            lim = checks["kappa_final_max"]
            dec = all(b < a for a, b in zip(kappas, kappas[1:]))
            self.check(f"end[{j}]:kappa_decreasing", kappas, None, dec)
            self.check(f"end[{j}]:kappa_final", kappas[-1], lim, kappas[-1] < lim)

    def catenoid(self):
        sec = self.cfg.section("catenoid")
        p = CatenoidProfile(sec["A"], sec["k"])
        n = int(sec.get("n", 200))
        s = np.linspace(p.R_neck + 0.05, float(sec["smax"]), n)
        res = np.abs(ode_residual(p, s))
        rows = [(si, height_profile(p, si), h_prime(p, si), ri) for si, ri in zip(s, res)]
        self.artifact(write_csv(self.out / "catenoid_profile.csv", ("s", "h", "h_prime", "ode_residual"), rows))
        lim = (self.cfg.section("checks") or {}).get("catenoid_residual_max", 1e-8)
        self.check("catenoid:ode_residual", float(res.max()), lim, res.max() < lim)

    def compare(self):
        sec = self.cfg.section("compare")
        G = WarpedPolarMetric.from_dict(sec["G"])
        k1, k2, A = float(sec["k1"]), float(sec["k2"]), float(sec["A"])
        n = int(sec.get("n", 1000))
        rng = np.random.default_rng(self.cfg.seed)
        lo = math.asinh(A) / k2
        s_cmp = np.sort(rng.uniform(lo, lo + 5.0, n))
        s_cmp = s_cmp[s_cmp > lo]
        s_rat = np.sort(rng.uniform(0.05, 5.0, n))
        signs = comparison_signs(G, (k1, k2), A, s_cmp)
        ratio = ratio_inequality(G, k1, k2, s_rat)
        rows = [(s, a, b, sa, sb) for s, a, b, sa, sb in zip(signs.samples, signs.num_k1, signs.num_k2, signs.status_k1, signs.status_k2)]
        self.artifact(write_csv(self.out / "compare_signs.csv", ("s", "num_k1", "num_k2", "status_k1", "status_k2"), rows))
        self.check("compare:k1_outward", signs.k1_outward, None, signs.k1_outward)
        self.check("compare:k2_inward", signs.k2_inward, None, signs.k2_inward)
        self.check("compare:ratio_inequality", ratio.min_margin, 0.0, ratio.passed)


def run_pipeline(config: ExperimentConfig) -> RunManifest:
    """Run every configured stage; failures halt only their dependents."""
    run = _Runner(config)
    run.out.mkdir(parents=True, exist_ok=True)
    if config.section("metric"):
        run.stage("metric", run.metric)
    if config.section("formula"):
        run.stage("formula", run.formula)
    for j, end in enumerate(config.ends):
        xi = run.stage(f"solve[{j}]", lambda j=j, end=end: run.solve(j, end))
        polys = run.stage(f"lift[{j}]", lambda j=j, end=end: run.lifts(j, end))
        run.stage(
            f"ledger[{j}]",
            lambda j=j, end=end, xi=xi, polys=polys: run.ledger(j, end, xi, polys),
            needs=(f"solve[{j}]", f"lift[{j}]"),
        )
    if config.section("catenoid"):
        run.stage("catenoid", run.catenoid)
    if config.section("compare"):
        run.stage("compare", run.compare)
    write_json(run.out / "manifest.json", run.manifest.to_dict())
    return run.manifest
