"""Induced metric, intrinsic and geodesic curvature, and the Gauss-Bonnet
accounting for one end.

The minimal surface carries the conformal metric

    ds^2 = lambda^2 |dz|^2,   lambda = 2 cosh(xi) |sqrt(phi)|,

and in natural coordinates w = F(z) this is ``4 cosh^2(xi) |dw|^2``.  Since
``log|sqrt(phi)|`` is harmonic on the end, all curvature comes from
``L = log cosh(xi)``:

    K dA = -Lap L dx dy,        kappa_g ds = -d_N L |dw|  on w-straight arcs,

with N the left unit normal in the w-plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import shapely

from .end_model import BranchDomain, EndData, _F_with_theta, hopf_phi, sqrt_phi
from .errors import DomainError, MeshingError, StencilError
from .lift_engine import PolygonP, _branch_eval, _solve_F0_real, close_polygon, lift
from .sinh_gordon import AnnulusGrid, XiField

__all__ = [
    "CurvatureField",
    "GaussBonnetReport",
    "KappaSamples",
    "MetricField",
    "SubharmonicityReport",
    "gauss_bonnet_end",
    "intrinsic_curvature",
    "kappa_horizontal",
    "kappa_vertical",
    "metric_from_xi",
    "natural_sampler",
    "polygon_kappa_abs",
    "subharmonicity_check",
    "total_curvature_formula",
    "total_curvature_multiple",
]


# ---------------------------------------------------------------------------
# metric and curvature fields


@dataclass
class MetricField:
    """Conformal factor lambda of ds^2 = lambda^2 |dz|^2 at the grid nodes."""

    lam: np.ndarray
    xi: XiField
    end: EndData

    def identity_error(self) -> float:
        """max |lambda^2 / (4 cosh^2(xi) |phi|) - 1|."""
        phi = np.abs(hopf_phi(self.end, self.xi.grid.z))
        c2 = np.cosh(self.xi.values) ** 2
        return float(np.max(np.abs(self.lam**2 / (4.0 * c2 * phi) - 1.0)))


def _require_annulus(xi: XiField):
    if not isinstance(xi.grid, AnnulusGrid):
        raise DomainError("expected a field on an annulus grid")


def metric_from_xi(xi: XiField, end: EndData) -> MetricField:
    _require_annulus(xi)
    if xi.end is not None and xi.end != end:
        raise DomainError("field was solved for a different end")
    lam = 2.0 * np.cosh(xi.values) * np.abs(sqrt_phi(end, xi.grid.z))
    return MetricField(lam, xi, end)


def _lap_rho_theta(u: np.ndarray, grid: AnnulusGrid) -> np.ndarray:
    """(d_rho^2 + d_theta^2) u at interior rows; boundary rows are NaN."""
    out = np.full(u.shape, np.nan)
    out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / grid.h_rho**2 + (
        np.roll(u, -1, 1) - 2 * u + np.roll(u, 1, 1)
    )[1:-1] / grid.h_theta**2
    return out


@dataclass
class CurvatureField:
    """Gauss curvature of the induced metric; NaN on the two boundary rows."""

    values: np.ndarray
    grid: AnnulusGrid

    def at(self, i: int, j: int) -> float:
        if i <= 0 or i >= self.grid.n_r - 1:
            raise StencilError("curvature stencil needs both radial neighbours")
        return float(self.values[i, j % self.grid.n_theta])

    @property
    def max_interior(self) -> float:
        return float(np.nanmax(self.values))


def intrinsic_curvature(metric: MetricField) -> CurvatureField:
    """K = -(Lap_0 log lambda) / lambda^2 with the 5-point stencil.

    The harmonic part log 2 + log|sqrt(phi)| contributes zero exactly and is
    not differenced.
    """
    grid = metric.xi.grid
    lap = _lap_rho_theta(np.log(np.cosh(metric.xi.values)), grid)
    r2 = (grid.r**2)[:, None]
    return CurvatureField(-lap / (r2 * metric.lam**2), grid)


@dataclass
class SubharmonicityReport:
    min_lap: float
    h: float
    identity_error: float

    @property
    def threshold(self) -> float:
        return -10.0 * self.h**2

    @property
    def passed(self) -> bool:
        return self.min_lap >= self.threshold


def subharmonicity_check(xi: XiField, end: EndData, K_M) -> SubharmonicityReport:
    """Discrete Lap_0 u for u = log cosh^2(xi), compared with
    2|grad_0 xi|^2 / cosh^2(xi) - 8 K_M sinh^2(xi) |phi|."""
    _require_annulus(xi)
    grid = xi.grid
    v = xi.values
    r2 = (grid.r**2)[:, None]
    lap_u = _lap_rho_theta(2.0 * np.log(np.cosh(v)), grid) / r2
    d_rho = np.full(v.shape, np.nan)
    d_rho[1:-1] = (v[2:] - v[:-2]) / (2 * grid.h_rho)
    d_th = (np.roll(v, -1, 1) - np.roll(v, 1, 1)) / (2 * grid.h_theta)
    grad2 = (d_rho**2 + d_th**2) / r2
    z = grid.z
    K = np.broadcast_to(np.asarray(K_M(z) if callable(K_M) else K_M, dtype=float), z.shape)
    rhs = 2 * grad2 / np.cosh(v) ** 2 - 8 * K * np.sinh(v) ** 2 * np.abs(hopf_phi(end, z))
    h = max(grid.h_rho, grid.h_theta)
    return SubharmonicityReport(
        float(np.nanmin(lap_u)), h, float(np.nanmax(np.abs(lap_u - rhs)))
    )


# ---------------------------------------------------------------------------
# natural-coordinate sampling and the kappa functions


def _invert_branch(end: EndData, k: int, w: np.ndarray, tol=1e-13, max_iter=50) -> np.ndarray:
    """Solve F_k(z) = w by Newton from the root of z^(m+1) = w in sector k."""
    dom = BranchDomain(k, end.m)
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    p = end.m + 1
    mid = 0.5 * (dom.arg_lo + dom.arg_hi)
    base = np.abs(w) ** (1.0 / p)
    ang = np.angle(w) / p
    # pick the (m+1)-th root closest in angle to the sector middle
    shifts = 2 * math.pi * np.arange(p) / p
    cand = ang[:, None] + shifts[None, :]
    dist = np.abs(np.angle(np.exp(1j * (cand - mid))))
    z = base * np.exp(1j * cand[np.arange(len(w)), np.argmin(dist, axis=1)])
    for _ in range(max_iter):
        theta = dom.arg_lo + np.mod(np.angle(z) - dom.arg_lo, 2 * math.pi)
        err = _F_with_theta(end, z, theta) - w
        if np.all(np.abs(err) <= tol * (1 + np.abs(w))):
            break
        z = z - err / sqrt_phi(end, z)
    else:
        raise DomainError("branch inversion did not converge")
    _branch_eval(end, dom, z)
    return z


def natural_sampler(xi: XiField, end: Optional[EndData] = None, k: int = 0):
    """Callable w -> (xi, grad_w xi) in natural coordinates.

    Natural-grid fields are sampled directly; annulus fields go through the
    inverse of F_k and grad_w xi = grad_z xi / conj(sqrt(phi)).
    """
    if xi.natural:
        return xi.sample
    end = end or xi.end
    if end is None:
        raise DomainError("annulus field needs its end data")

    def sample(w):
        w = np.asarray(w, dtype=complex)
        z = _invert_branch(end, k, w.ravel())
        v, gz = xi.sample(z)
        gw = gz / np.conj(sqrt_phi(end, z))
        return v.reshape(w.shape), gw.reshape(w.shape)

    return sample


class KappaSamples(NamedTuple):
    param: np.ndarray
    values: np.ndarray
    integral: float


def _check_inside(xi: XiField, w: np.ndarray, sampler_is_direct: bool):
    if sampler_is_direct and not np.all(xi.contains(w)):
        raise DomainError("line leaves the solved strip")


def kappa_horizontal(
    xi: XiField, C: float, end: Optional[EndData] = None, k: int = 0, n: int = 801
) -> KappaSamples:
    """Geodesic curvature -xi_y / (2 cosh xi) along tau_C(x) = x + iC, |x| <= C.

    ``integral`` is int |kappa| ds = int |xi_y| dx.
    """
    if not C > 0:
        raise DomainError("C must be positive")
    x = np.linspace(-C, C, n)
    w = x + 1j * C
    _check_inside(xi, w, xi.natural)
    try:
        v, g = natural_sampler(xi, end, k)(w)
    except DomainError as exc:
        raise DomainError(f"line Im w = {C} leaves the solved strip") from exc
    kappa = -g.imag / (2.0 * np.cosh(v))
    return KappaSamples(x, kappa, float(np.trapezoid(np.abs(g.imag), x)))


def kappa_vertical(
    xi: XiField,
    C: float,
    end: Optional[EndData] = None,
    k: int = 0,
    y_range: Optional[Tuple[float, float]] = None,
    n: int = 801,
) -> KappaSamples:
    """Bound (xi_x^2 sinh^2 xi + xi_y^2)^(1/2) / (2 cosh^2 xi) on |kappa_g|
    along chi_C, the curve over Re w = C.

    The default y-range is [-C, C] for natural-grid fields and the half
    [0, C] (even k) or [-C, 0] (odd k) for annulus fields.  ``integral`` is
    taken against ds = 2 cosh(xi) dy.
    """
    if not C > 0:
        raise DomainError("C must be positive")
    if y_range is None:
        y_range = (-C, C) if xi.natural else ((0.0, C) if k % 2 == 0 else (-C, 0.0))
    y = np.linspace(y_range[0], y_range[1], n)
    w = C + 1j * y
    _check_inside(xi, w, xi.natural)
    try:
        v, g = natural_sampler(xi, end, k)(w)
    except DomainError as exc:
        raise DomainError(f"line Re w = {C} leaves the solved strip") from exc
    ch = np.cosh(v)
    bound = np.sqrt(g.real**2 * np.sinh(v) ** 2 + g.imag**2) / (2.0 * ch**2)
    return KappaSamples(y, bound, float(np.trapezoid(bound * 2.0 * ch, y)))


# ---------------------------------------------------------------------------
# Gauss-Bonnet on Omega(C, R)


@dataclass
class GaussBonnetReport:
    """Terms of int_Omega K + int_P kappa_g - int_circle kappa_g = -2 pi (m+1).

    ``boundary_terms`` holds the smooth geodesic curvature of each arc of P;
    vertex turning is listed separately and sums to 2 pi (m+1).
    """

    interior_integral: float
    boundary_terms: List[Tuple[str, float]]
    circle_term: float
    vertices: List[dict]
    turning_total: float
    euler_data: Tuple[int, int, Tuple[int, ...]]
    target: float
    defect: float
    abs_kappa_total: float
    bstar_abs: float = 0.0
    bstar_tail_bound: float = 0.0

    @property
    def polygon_term(self) -> float:
        return float(sum(v for _, v in self.boundary_terms))

    @property
    def bstar_bound_ok(self) -> bool:
        return self.bstar_abs <= self.bstar_tail_bound + 1e-12

    def to_dict(self) -> dict:
        return {
            "interior_integral": self.interior_integral,
            "boundary_terms": [{"curve": c, "kappa_g": v} for c, v in self.boundary_terms],
            "polygon_term": self.polygon_term,
            "circle_term": self.circle_term,
            "vertices": self.vertices,
            "turning_total": self.turning_total,
            "euler_data": {"g": self.euler_data[0], "n": self.euler_data[1], "ms": list(self.euler_data[2])},
            "target": self.target,
            "defect": self.defect,
            "abs_kappa_total": self.abs_kappa_total,
            "bstar_abs": self.bstar_abs,
            "bstar_tail_bound": self.bstar_tail_bound,
        }


def _arc_name(piece, idx_in_class) -> str:
    if piece.cls == "B*":
        return "B*"
    kk, ll = divmod(piece.k, 2)
    return f"{piece.cls}^{ll}_{kk}"


def _piece_kappa(xi: XiField, end: EndData, piece):
    """Samples of kappa_g ds / |dw| and the w arclength along one piece."""
    v, gz = xi.sample(piece.z)
    gw = gz / np.conj(sqrt_phi(end, piece.z))
    normal = 1j * piece.direction
    d_n = (np.conj(normal) * gw).real
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(piece.w)))])
    return -np.tanh(v) * d_n, s


def polygon_kappa_abs(xi: XiField, poly: PolygonP, end: Optional[EndData] = None) -> float:
    """int over the smooth arcs of P of |kappa_g| ds."""
    end = end or xi.end
    total = 0.0
    for pc in poly.pieces:
        kap, s = _piece_kappa(xi, end, pc)
        total += float(np.trapezoid(np.abs(kap), s))
    return total


def _circle_term(xi: XiField, end: EndData) -> float:
    """int kappa_g ds over |z| = R_in, counterclockwise, in the lambda-metric."""
    grid = xi.grid
    z = grid.z[0]
    f = sqrt_phi(end, z)
    df = (end.m + 1) * end.m * z ** (end.m - 1) - 1j * end.c / z**2 if end.m else -1j * end.c / z**2
    harmonic = (z * df / f).real
    v = xi.values
    d_rho = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * grid.h_rho)
    integrand = 1.0 + harmonic + np.tanh(v[0]) * d_rho
    # periodic trapezoid
    return float(np.sum(integrand) * grid.h_theta)


def _area_term(xi: XiField, poly: PolygonP, supersample: int = 8) -> float:
    """int_Omega K dA = -int Lap_(rho,theta) log cosh(xi) d rho d theta,
    clipped to the inside of P."""
    grid = xi.grid
    L = np.log(np.cosh(xi.values))
    lap = _lap_rho_theta(L, grid)
    lap[0] = 3 * lap[1] - 3 * lap[2] + lap[3]
    lap[-1] = 3 * lap[-2] - 3 * lap[-3] + lap[-4]
    hr, ht = grid.h_rho, grid.h_theta
    rho, th = grid.rho, grid.theta
    RHO, TH = np.meshgrid(rho, th, indexing="ij")
    X = np.exp(RHO) * np.cos(TH)
    Y = np.exp(RHO) * np.sin(TH)
    ring = poly.ring()
    polygon = shapely.Polygon(ring)
    if not polygon.is_valid:
        raise MeshingError("polygon P is not simple")
    frac = shapely.contains_xy(polygon, X, Y).astype(float)
    diam = np.exp(RHO) * math.hypot(hr, ht)
    near = shapely.distance(ring, shapely.points(X, Y)) < diam
    if np.any(near):
        k = supersample
        off = (np.arange(k) + 0.5) / k - 0.5
        dr, dt = np.meshgrid(off * hr, off * ht, indexing="ij")
        rr = RHO[near][:, None, None] + dr[None]
        tt = TH[near][:, None, None] + dt[None]
        inside = shapely.contains_xy(polygon, np.exp(rr) * np.cos(tt), np.exp(rr) * np.sin(tt))
        frac[near] = inside.reshape(len(rr), -1).mean(axis=1)
    w = np.full(grid.n_r, hr)
    w[0] = w[-1] = 0.5 * hr
    return float(-np.sum(lap * frac * w[:, None]) * ht)


def _bstar_tail(xi: XiField, end: EndData, poly: PolygonP, n: int = 401) -> Tuple[float, float]:
    """int_{B*} |kappa_g| ds and int |xi_y| dx over Re F_0 in
    [C - 2 pi |c|, C + 2 pi |c|] along l_0."""
    bstar = [pc for pc in poly.pieces if pc.cls == "B*"]
    if not bstar:
        return 0.0, 0.0
    kap, s = _piece_kappa(xi, end, bstar[0])
    lhs = float(np.trapezoid(np.abs(kap), s))
    C = poly.lift.C
    half = 2 * math.pi * abs(end.c)
    ss = np.linspace(C - half, C + half, n)
    # march outward from p so every Newton solve starts next to its root
    dom0 = BranchDomain(0, end.m)
    zs = np.empty(n, dtype=complex)
    centre = int(np.argmin(np.abs(ss - C)))
    zs[centre] = _solve_F0_real(end, ss[centre], poly.lift.start_point, 1e-12 * (1 + C))
    for i in range(centre + 1, n):
        zs[i] = _solve_F0_real(end, ss[i], zs[i - 1], 1e-12 * (1 + C))
    for i in range(centre - 1, -1, -1):
        zs[i] = _solve_F0_real(end, ss[i], zs[i + 1], 1e-12 * (1 + C))
    _branch_eval(end, dom0, zs)
    if not np.all(xi.contains(zs)):
        raise DomainError("tail interval of l_0 leaves the solved annulus")
    _, gz = xi.sample(zs)
    gw = gz / np.conj(sqrt_phi(end, zs))
    return lhs, float(np.trapezoid(np.abs(gw.imag), ss))


def gauss_bonnet_end(
    end: EndData,
    xi: XiField,
    C: float,
    step: float = 0.05,
    polygon: Optional[PolygonP] = None,
    genus: int = 0,
    n_ends: int = 1,
    ms: Optional[Sequence[int]] = None,
    supersample: int = 8,
) -> GaussBonnetReport:
    """Gauss-Bonnet ledger on the region between |z| = R_in and P(C).

    ``defect = interior + sum(arcs) - circle + 2 pi (m+1)``.
    """
    _require_annulus(xi)
    grid = xi.grid
    if polygon is None:
        polygon = close_polygon(lift(end, C, step), end)
    if not polygon.is_simple():
        raise MeshingError("polygon P is not simple")
    rmin, rmax = float(np.min(np.abs(polygon.points))), float(np.max(np.abs(polygon.points)))
    if rmin <= grid.R_in or rmax >= grid.R_out:
        raise MeshingError(
            f"P(C) spans |z| in [{rmin:.4g}, {rmax:.4g}], outside the open annulus "
            f"({grid.R_in:.4g}, {grid.R_out:.4g})"
        )

    terms: List[Tuple[str, float]] = []
    abs_total = 0.0
    for pc in polygon.pieces:
        kap, s = _piece_kappa(xi, end, pc)
        terms.append((_arc_name(pc, 0), float(np.trapezoid(kap, s))))
        abs_total += float(np.trapezoid(np.abs(kap), s))

    verts = [
        {
            "z_re": v.point.real,
            "z_im": v.point.imag,
            "t": v.t,
            "interior_angle": v.angle,
            "raw_angle": v.raw_angle,
            "turning": math.pi - v.angle,
            "kind": v.kind,
        }
        for v in polygon.vertices
    ]
    turning = float(sum(d["turning"] for d in verts))
    interior = _area_term(xi, polygon, supersample)
    circle = _circle_term(xi, end)
    target = -2 * math.pi * (end.m + 1)
    defect = interior + sum(v for _, v in terms) - circle - target
    bstar_abs, tail = _bstar_tail(xi, end, polygon) if end.c != 0 else (0.0, 0.0)
    ms = tuple(ms) if ms is not None else (end.m,)
    return GaussBonnetReport(
        interior, terms, circle, verts, turning, (genus, n_ends, ms), target, defect, abs_total, bstar_abs, tail
    )


# ---------------------------------------------------------------------------
# global formula


def total_curvature_multiple(g: int, n: int, ms: Sequence[int]) -> int:
    """Integer q with int K = 2 pi q, q = 2 - 2g - 2n - sum(ms)."""
    g, n = int(g), int(n)
    ms = [int(m) for m in ms]
    if g < 0:
        raise DomainError("genus must be nonnegative")
    if n < 1:
        raise DomainError("need at least one end")
    if len(ms) != n:
        raise DomainError(f"expected {n} end orders, got {len(ms)}")
    if any(m < 0 for m in ms):
        raise DomainError("end orders must be nonnegative")
    return 2 - 2 * g - 2 * n - sum(ms)


def total_curvature_formula(g: int, n: int, ms: Sequence[int]) -> float:
    """2 pi (2 - 2g - 2n - sum m_k)."""
    return 2 * math.pi * total_curvature_multiple(g, n, ms)
