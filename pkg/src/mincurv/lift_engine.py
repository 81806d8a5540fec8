"""Generalized lift of the square curve and the truncating polygon P(C).

The square ``|Re w| <= C, |Im w| <= C`` is traversed counterclockwise m+1
times starting at ``w = C``.  Parameter window ``[4jC, 4(j+1)C]`` is lifted
through the branch ``F_j`` of ``F = z^(m+1) + c i log z`` by predictor
corrector continuation; consecutive windows meet on the level curves
``l_j``.  Closing the lift along ``l_0`` gives the polygon ``P(C)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import shapely

from .end_model import (
    BranchDomain,
    EndData,
    _F_with_theta,
    im_F,
    level_band,
    sqrt_phi,
)
from .errors import (
    BranchError,
    CTooSmallError,
    ContinuationDivergedError,
    DomainError,
    NotOnL0Error,
    SectorMismatchError,
)

__all__ = [
    "GeneralizedLift",
    "LiftPiece",
    "PolygonP",
    "RectanglePath",
    "Vertex",
    "build_gamma",
    "close_polygon",
    "lift",
    "lift_threshold",
    "polygon_escape_check",
]

# (start, end, derivative) of the three pieces of an even / odd window, in
# units of C relative to the window start 4kC
_WINDOW_PIECES = (
    ((0.0, 1.0, 1j), (1.0, 3.0, -1 + 0j), (3.0, 4.0, -1j)),
    ((0.0, 1.0, -1j), (1.0, 3.0, 1 + 0j), (3.0, 4.0, 1j)),
)

# (start, end, derivative) of the five pieces of one loop, in units of C
_PIECES = (
    (0.0, 1.0, 1j),
    (1.0, 3.0, -1.0),
    (3.0, 5.0, -1j),
    (5.0, 7.0, 1.0),
    (7.0, 8.0, 1j),
)


@dataclass(frozen=True)
class RectanglePath:
    """The square of half-side C traversed m+1 times from w = C."""

    C: float
    m: int

    @property
    def length(self) -> float:
        return 8.0 * (self.m + 1) * self.C

    def _local(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.length * (1 + 1e-14)):
            raise DomainError("parameter outside [0, 8(m+1)C]")
        tau = t - 8.0 * self.C * np.minimum(np.floor(t / (8.0 * self.C)), self.m)
        return t, tau

    def __call__(self, t):
        C = self.C
        t, tau = self._local(t)
        out = np.select(
            [tau <= C, tau <= 3 * C, tau <= 5 * C, tau <= 7 * C],
            [C + 1j * tau, 2 * C - tau + 1j * C, -C + 1j * (4 * C - tau), tau - 6 * C - 1j * C],
            C + 1j * (tau - 8 * C),
        )
        return out if out.ndim else complex(out)

    def derivative(self, t):
        C = self.C
        t, tau = self._local(t)
        out = np.select(
            [tau < C, tau < 3 * C, tau < 5 * C, tau < 7 * C],
            [1j + 0 * tau, -1 + 0j * tau, -1j + 0 * tau, 1 + 0j * tau],
            1j + 0 * tau,
        )
        return out if out.ndim else complex(out)

    def breakpoints(self) -> np.ndarray:
        """Corners and loop boundaries, in increasing order."""
        pts = []
        for j in range(self.m + 1):
            for a, _, _ in _PIECES:
                pts.append((8 * j + a) * self.C)
        pts.append(self.length)
        return np.array(pts)


def build_gamma(C: float, m: int) -> RectanglePath:
    if not C > 0:
        raise DomainError("C must be positive")
    if int(m) != m or m < 0:
        raise DomainError("m must be a nonnegative integer")
    return RectanglePath(float(C), int(m))


@dataclass
class LiftPiece:
    """A smooth piece of the lift: constant w-direction, one branch."""

    cls: str  # "A", "B" or "B*"
    k: int  # sector index of the branch F_k used on this piece
    t: np.ndarray
    z: np.ndarray
    w: np.ndarray
    direction: complex  # unit tangent of the image in the w-plane


@dataclass
class GeneralizedLift:
    end: EndData
    C: float
    step: float
    pieces: List[LiftPiece]
    start_point: complex
    end_point: complex

    @property
    def segments(self):
        """(sector k, t, z) per branch window, in order."""
        out = []
        for k in range(self.end.n_sectors):
            ps = [p for p in self.pieces if p.k == k]
            t = np.concatenate([ps[0].t] + [p.t[1:] for p in ps[1:]])
            z = np.concatenate([ps[0].z] + [p.z[1:] for p in ps[1:]])
            out.append((k, t, z))
        return out

    def forward_residual(self) -> float:
        """max |F_k(beta(t)) - gamma(t)| over all samples."""
        worst = 0.0
        for p in self.pieces:
            dom = BranchDomain(p.k, self.end.m)
            worst = max(worst, float(np.max(np.abs(_branch_eval(self.end, dom, p.z) - p.w))))
        return worst


def _branch_eval(end, dom, z):
    theta = dom.arg_lo + np.mod(np.angle(z) - dom.arg_lo, 2 * math.pi)
    if np.any(theta > dom.arg_hi + 1e-12):
        raise BranchError(f"point outside sector {dom.k}")
    return _F_with_theta(end, z, theta)


def lift_threshold(end: EndData) -> float:
    """max{M0, M1}: M0 = R^(m+1) + 4 pi |c|, M1 = max |Im F| on |z| = R."""
    M0 = end.R ** (end.m + 1) + 4 * math.pi * abs(end.c)
    theta = np.linspace(0.0, 2 * math.pi, 4097)
    M1 = float(np.max(np.abs(im_F(end, end.R * np.exp(1j * theta)))))
    return max(M0, M1)


class _Stepper:
    """Predictor-corrector for F_k(z) = target along a straight w-segment."""

    def __init__(self, end, dom, scale, min_step, max_newton=12):
        self.end = end
        self.dom = dom
        self.tol = 1e-12 * (1.0 + scale)
        self.min_step = min_step
        self.max_newton = max_newton
        self.branch_trouble = False

    def _rhs(self, z, dw):
        return dw / sqrt_phi(self.end, z)

    def _try(self, z0, w0, w1):
        # RK4 predictor on dz/ds = (w1 - w0) / sqrt(phi(z)), s in [0, 1]
        dw = w1 - w0
        k1 = self._rhs(z0, dw)
        k2 = self._rhs(z0 + 0.5 * k1, dw)
        k3 = self._rhs(z0 + 0.5 * k2, dw)
        k4 = self._rhs(z0 + k3, dw)
        z = z0 + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        pred_len = abs(z - z0)
        zp = z
        for _ in range(self.max_newton):
            try:
                res = _branch_eval(self.end, self.dom, np.asarray(z)) - w1
            except BranchError:
                self.branch_trouble = True
                return None
            res = complex(res)
            if abs(res) < self.tol:
                if abs(z - zp) > 0.5 * pred_len + 1e-12:
                    return None
                return z
            z = z - res / sqrt_phi(self.end, z)
        return None

    def advance(self, z0, w0, w1, h):
        """March from (z0, w0) to w1; sub-steps are halved on failure."""
        z = self._try(z0, w0, w1)
        if z is not None:
            return z
        if h / 2 < self.min_step:
            if self.branch_trouble:
                raise SectorMismatchError(f"continuation left sector {self.dom.k}")
            raise ContinuationDivergedError(f"Newton failed below step {self.min_step:g}")
        wm = 0.5 * (w0 + w1)
        zm = self.advance(z0, w0, wm, h / 2)
        return self.advance(zm, wm, w1, h / 2)


def _even_nodes(a, b, step):
    n = max(2, int(math.ceil((b - a) / step)))
    n += n % 2
    return np.linspace(a, b, n + 1)


def _solve_F0_real(end, s, z0, tol):
    dom = BranchDomain(0, end.m)
    z = complex(z0)
    for _ in range(60):
        res = complex(_branch_eval(end, dom, np.asarray(z))) - s
        if abs(res) < tol:
            return z
        z = z - res / sqrt_phi(end, z)
    raise ContinuationDivergedError("could not locate F_0(p) = s on l_0")


def _on_level(end, z, k, tol):
    lo, hi = level_band(end, k)
    mid = 0.5 * (lo + hi)
    theta = math.atan2((z * np.exp(-1j * mid)).imag, (z * np.exp(-1j * mid)).real) + mid
    val = abs(im_F(end, z))
    scale = 1.0 + abs(z) ** (end.m + 1)
    return val < tol * scale and lo - 1e-9 <= theta <= hi + 1e-9


def lift(end: EndData, C: float, step: float = 0.05, min_halvings: int = 10) -> GeneralizedLift:
    """Generalized lift of the square path of half-side C through F_0..F_{2m+1}.

    Starts at the unique p on l_0 with F_0(p) = C.  Each window
    [4kC, 4(k+1)C] is lifted through F_k and must end on l_{k+1}; the
    final point lies on l_0 again.
    """
    if not step > 0:
        raise DomainError("step must be positive")
    thr = lift_threshold(end)
    if not C > thr:
        raise CTooSmallError(f"C = {C:g} must exceed max(M0, M1) = {thr:g}")
    gamma = build_gamma(C, end.m)
    level_tol = 1e-10

    z = _solve_F0_real(end, C, C ** (1.0 / (end.m + 1)), 1e-13 * (1 + C))
    if not _on_level(end, z, 0, level_tol):
        raise NotOnL0Error("start point is not on l_0")
    start = z
    pieces: List[LiftPiece] = []
    for k in range(end.n_sectors):
        dom = BranchDomain(k, end.m)
        stepper = _Stepper(end, dom, C, step / 2**min_halvings)
        base = 4.0 * k * C
        for a, b, deriv in _WINDOW_PIECES[k % 2]:
            ts = _even_nodes(base + a * C, base + b * C, step)
            ws = gamma(ts)
            zs = np.empty(len(ts), dtype=complex)
            zs[0] = z
            for i in range(1, len(ts)):
                zs[i] = stepper.advance(zs[i - 1], ws[i - 1], ws[i], ts[i] - ts[i - 1])
            z = zs[-1]
            cls = "A" if deriv.imag == 0 else "B"
            pieces.append(LiftPiece(cls, k, ts, zs, ws, deriv))
        nxt = (k + 1) % end.n_sectors
        if not _on_level(end, z, nxt, level_tol):
            raise SectorMismatchError(f"window {k} did not end on l_{nxt}")

    # the sector switch happens where Im F changes sign across l_k
    for before, after in zip(pieces[2::3], pieces[3::3]):
        if np.sign(im_F(end, before.z[-2])) != -np.sign(im_F(end, after.z[1])):
            raise SectorMismatchError("Im F does not change sign at a sector switch")
    return GeneralizedLift(end, float(C), float(step), pieces, start, z)


@dataclass
class Vertex:
    point: complex
    t: float
    angle: float  # interior angle, classified to pi/2 or 3pi/2
    raw_angle: float  # interior angle from discrete one-sided tangents
    kind: str  # "corner", "start" or "end"


@dataclass
class PolygonP:
    """Closed polygon P(C): lift plus closing arc B* along l_0."""

    lift: GeneralizedLift
    closing_arc: np.ndarray
    pieces: List[LiftPiece]
    vertices: List[Vertex]
    points: np.ndarray
    t: np.ndarray
    sector: np.ndarray
    arc_class: np.ndarray
    arcs: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def reflex_count(self) -> int:
        return sum(1 for v in self.vertices if v.angle > math.pi)

    @property
    def degenerate_closing(self) -> bool:
        return len(self.closing_arc) <= 1

    def signed_area(self) -> float:
        x, y = self.points.real, self.points.imag
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def ring(self):
        return shapely.LinearRing(np.column_stack([self.points.real, self.points.imag]))

    def self_intersections(self) -> int:
        """Count crossings between non-adjacent edges (STR-tree sweep)."""
        a = self.points
        b = np.roll(a, -1)
        segs = shapely.linestrings(
            np.stack([np.column_stack([a.real, a.imag]), np.column_stack([b.real, b.imag])], axis=1)
        )
        tree = shapely.STRtree(segs)
        i, j = tree.query(segs, predicate="intersects")
        n = len(a)
        keep = (i < j) & ((j - i) % n != 1) & ((i - j) % n != 1)
        return int(np.count_nonzero(keep))

    def is_simple(self) -> bool:
        return self.self_intersections() == 0

    def min_modulus(self) -> float:
        return float(shapely.distance(shapely.Point(0.0, 0.0), self.ring()))

    def encloses_disc(self, R: float) -> bool:
        poly = shapely.Polygon(self.ring())
        return bool(poly.contains(shapely.Point(0.0, 0.0)) and self.min_modulus() > R)

    def rows(self):
        """(t, z_re, z_im, sector_k, arc_class) rows for CSV export."""
        return [
            (float(t), float(z.real), float(z.imag), int(k), str(a))
            for t, z, k, a in zip(self.t, self.points, self.sector, self.arc_class)
        ]


def _one_sided(pts_before, pts_after):
    """Second-order backward/forward tangents at a shared vertex."""
    z0, zm1, zm2 = pts_before[-1], pts_before[-2], pts_before[-3]
    t_in = 3 * z0 - 4 * zm1 + zm2
    a1, a2 = pts_after[1], pts_after[2]
    t_out = -3 * pts_after[0] + 4 * a1 - a2
    return t_in, t_out


def _interior_angle(t_in, t_out):
    turn = math.atan2((t_out / t_in).imag, (t_out / t_in).real)
    raw = math.pi - turn
    return raw, (math.pi / 2 if abs(raw - math.pi / 2) <= abs(raw - 1.5 * math.pi) else 1.5 * math.pi)


def close_polygon(lift_: GeneralizedLift, end: EndData, degenerate_tol: float = 1e-9) -> PolygonP:
    """Append the closing arc B* along l_0 and classify arcs and vertices."""
    p, q = lift_.start_point, lift_.end_point
    tol = 1e-8
    for name, pt in (("start", p), ("end", q)):
        if not _on_level(end, pt, 0, tol):
            raise NotOnL0Error(f"lift {name} point is off l_0")
    C = lift_.C
    pieces = list(lift_.pieces)
    degenerate = abs(p - q) < degenerate_tol
    dom0 = BranchDomain(0, end.m)
    if degenerate:
        closing = np.array([q])
    else:
        s_q = float(complex(_branch_eval(end, dom0, np.asarray(q))).real)
        n = max(4, int(math.ceil(abs(C - s_q) / lift_.step)))
        ss = np.linspace(s_q, C, n + 1)
        zs = np.empty(n + 1, dtype=complex)
        zs[0] = q
        for i in range(1, n + 1):
            zs[i] = _solve_F0_real(end, ss[i], zs[i - 1], 1e-12 * (1 + C))
        zs[-1] = p
        t_end = lift_.pieces[-1].t[-1]
        pieces.append(
            LiftPiece("B*", 0, t_end + np.abs(ss - s_q), zs, ss.astype(complex), complex(np.sign(C - s_q)))
        )
        closing = zs

    # ring assembly: every piece without its last sample
    pts, ts, ks, cl = [], [], [], []
    for pc in pieces:
        pts.append(pc.z[:-1])
        ts.append(pc.t[:-1])
        ks.append(np.full(len(pc.z) - 1, pc.k))
        cl.append(np.full(len(pc.z) - 1, pc.cls, dtype=object))
    points = np.concatenate(pts)
    tarr = np.concatenate(ts)
    sector = np.concatenate(ks)
    arc_class = np.concatenate(cl)

    vertices = []
    n = len(pieces)
    for i in range(n):
        prev, cur = pieces[i - 1], pieces[i]
        if degenerate and i == 0:
            continue  # p is a smooth point of the right side when c = 0
        if prev.cls == cur.cls == "B" and prev.direction == cur.direction:
            continue  # window boundary on a straight side, not a corner
        t_in, t_out = _one_sided(prev.z, cur.z)
        raw, ang = _interior_angle(t_in, t_out)
        kind = "corner"
        if cur.cls == "B*":
            kind = "end"
        elif prev.cls == "B*":
            kind = "start"
        vertices.append(Vertex(complex(cur.z[0]), float(cur.t[0]), ang, raw, kind))

    arcs = {}
    for idx, pc in enumerate(pieces):
        if pc.cls == "B*":
            arcs.setdefault("B*", []).append(idx)
        else:
            kk, ll = divmod(pc.k, 2)
            arcs.setdefault(f"{pc.cls}^{ll}_{kk}", []).append(idx)
    return PolygonP(lift_, closing, pieces, vertices, points, tarr, sector, arc_class, arcs)


def polygon_escape_check(
    end: EndData, K_box: float, Cs: Sequence[float], step: float = 0.05
) -> Optional[float]:
    """Least C in ``Cs`` whose polygon avoids the closed disc |z| <= K_box."""
    Cs = list(Cs)
    if any(b <= a for a, b in zip(Cs, Cs[1:])):
        raise DomainError("Cs must be strictly increasing")
    for C in Cs:
        if C <= lift_threshold(end):
            continue
        poly = close_polygon(lift(end, C, step), end)
        if float(np.min(np.abs(poly.points))) > K_box:
            return C
    return None
