"""CSV, JSON and SVG output with fixed numeric precision."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .lift_engine import PolygonP
from .sinh_gordon import AnnulusGrid, XiField, interior_residual

__all__ = [
    "fmt",
    "read_bc_inner",
    "read_json",
    "read_xi_csv",
    "write_csv",
    "write_json",
    "write_xi_csv",
    "emit_svg",
]

PRECISION = 12


def fmt(x) -> str:
    """12 significant digits for floats; other values pass through str()."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if v == 0.0:
            return "0"  # drop the sign of -0.0
        return f"{v:.{PRECISION}g}"
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _rounded(obj):
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if not math.isfinite(v) else float(f"{v:.{PRECISION}g}")
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_rounded(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_xi_csv(path, xi: XiField) -> Path:
    """Rows (r, theta, xi, residual) in radial-major order."""
    grid = xi.grid
    if not isinstance(grid, AnnulusGrid):
        raise DomainError("xi.csv holds annulus fields only")
    res = interior_residual(xi) if xi.K_M is not None else np.zeros_like(xi.values)
    rows = (
        (r, th, xi.values[i, j], res[i, j])
        for i, r in enumerate(grid.r)
        for j, th in enumerate(grid.theta)
    )
    return write_csv(path, ("r", "theta", "xi", "residual"), rows)


def read_xi_csv(path, end=None) -> XiField:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    r = np.unique(data[:, 0])
    th = np.unique(data[:, 1])
    if len(r) * len(th) != len(data):
        raise DomainError("xi.csv is not a full tensor grid")
    grid = AnnulusGrid(float(r[0]), float(r[-1]), len(r), len(th))
    values = data[:, 2].reshape(len(r), len(th))
    return XiField(values, grid, float(np.max(np.abs(data[:, 3]))), 0, end, None)


def read_bc_inner(path, theta: np.ndarray) -> np.ndarray:
    """Periodic linear interpolation of (theta, value) rows onto ``theta``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2 or len(data) == 0:
        raise DomainError("bc file needs (theta, value) rows")
    return np.interp(theta, data[:, 0], data[:, 1], period=2 * math.pi)


_ARC_COLOURS = {"A": "#1f77b4", "B": "#d62728", "B*": "#2ca02c"}


def emit_svg(polygon: PolygonP, level_curves, path, size: int = 800) -> Path:
    """Layers: level curves, polygon arcs by class, annotated vertices."""
    if polygon is None or len(polygon.points) == 0:
        raise DomainError("nothing to draw: polygon is empty")
    curves = list(level_curves or [])
    if not curves:
        raise DomainError("nothing to draw: no level curves")
    pts = np.concatenate([polygon.points] + [c.samples for c in curves])
    lo_x, hi_x = float(pts.real.min()), float(pts.real.max())
    lo_y, hi_y = float(pts.imag.min()), float(pts.imag.max())
    span = max(hi_x - lo_x, hi_y - lo_y) or 1.0
    pad = 0.05 * span
    scale = size / (span + 2 * pad)

    def xy(z):
        return f"{(z.real - lo_x + pad) * scale:.3f},{(hi_y - z.imag + pad) * scale:.3f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        '<g id="level-curves" stroke="#999999" stroke-width="1" fill="none">',
    ]
    for c in curves:
        out.append(f'<polyline data-k="{c.k}" points="{" ".join(xy(z) for z in c.samples)}"/>')
    out.append("</g>")
    out.append('<g id="arcs" stroke-width="2" fill="none">')
    for pc in polygon.pieces:
        colour = _ARC_COLOURS[pc.cls]
        out.append(
            f'<polyline class="arc-{pc.cls}" data-k="{pc.k}" stroke="{colour}" '
            f'points="{" ".join(xy(z) for z in pc.z)}"/>'
        )
    out.append("</g>")
    out.append('<g id="vertices" font-size="10" font-family="monospace">')
    for v in polygon.vertices:
        reflex = v.angle > math.pi
        x, y = xy(v.point).split(",")
        fill = "#ff7f0e" if reflex else "#000000"
        label = f"{v.angle / math.pi:.1f}pi"
        out.append(
            f'<circle class="vertex{" reflex" if reflex else ""}" cx="{x}" cy="{y}" r="3" fill="{fill}"/>'
        )
        out.append(f'<text x="{float(x) + 4:.3f}" y="{float(y) - 4:.3f}">{label}</text>')
    out.append("</g>")
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
