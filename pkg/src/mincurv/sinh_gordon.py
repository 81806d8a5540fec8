"""Finite-difference solver for the sinh-Gordon field xi = log|g|.

On an end the Gauss-map field satisfies

    Lap_0 xi = -2 K_M sinh(2 xi) |phi|

in the z-coordinates of the exterior annulus, and ``Lap xi = -2 K_M sinh(2 xi)``
in natural coordinates w = F(z).  Both are discretised with the 5-point
stencil: on a log-polar annulus grid (rho = log r, theta periodic), where
``Lap_0 = r^-2 (d_rho^2 + d_theta^2)``, and on a Cartesian square in w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import spsolve
from scipy.stats import linregress

from .end_model import EndData, hopf_phi, sqrt_phi
from .errors import DegenerateFitError, DomainError, NoConvergenceError, UnstableSolveError

__all__ = [
    "AnnulusGrid",
    "DecayFit",
    "GradientDecayFit",
    "SolverConfig",
    "SquareGrid",
    "XiField",
    "barrier_bound_check",
    "barrier_psi",
    "decay_fit",
    "gradient_decay_check",
    "interior_residual",
    "psi_laplacian_check",
    "solve_xi",
    "solve_xi_natural",
    "zero_field",
]


@dataclass(frozen=True)
class AnnulusGrid:
    """Log-radial x uniform-angular grid on R_in <= |z| <= R_out."""

    R_in: float
    R_out: float
    n_r: int
    n_theta: int

    def __post_init__(self):
        if not 0 < self.R_in < self.R_out:
            raise DomainError("need 0 < R_in < R_out")
        if self.n_r < 8 or self.n_theta < 8:
            raise DomainError("n_r and n_theta must be at least 8")

    @property
    def rho(self) -> np.ndarray:
        return np.linspace(math.log(self.R_in), math.log(self.R_out), self.n_r)

    @property
    def theta(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def h_rho(self) -> float:
        return math.log(self.R_out / self.R_in) / (self.n_r - 1)

    @property
    def h_theta(self) -> float:
        return 2 * math.pi / self.n_theta

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.rho)

    @property
    def z(self) -> np.ndarray:
        """Node positions, shape (n_r, n_theta)."""
        return np.exp(self.rho)[:, None] * np.exp(1j * self.theta)[None, :]

    def refined(self, factor: int = 2) -> "AnnulusGrid":
        return AnnulusGrid(self.R_in, self.R_out, factor * (self.n_r - 1) + 1, factor * self.n_theta)


@dataclass(frozen=True)
class SquareGrid:
    """Cartesian grid on the square |Re(w-w0)|, |Im(w-w0)| <= half_width."""

    half_width: float
    n: int
    center: complex = 0j

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError("half_width must be positive")
        if self.n < 8:
            raise DomainError("n must be at least 8")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)

    @property
    def h(self) -> float:
        return 2 * self.half_width / (self.n - 1)

    @property
    def w(self) -> np.ndarray:
        """Node positions, shape (n, n); axis 0 is Re w, axis 1 is Im w."""
        return self.center + self.x[:, None] + 1j * self.x[None, :]


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 60
    damping: float = 0.7
    bc_inner: Union[float, np.ndarray, Callable] = 0.0
    bc_outer: float = 0.0
    xi_cap: float = 20.0
    linear_solver: str = "direct"  # or "red-black"
    max_sweeps: int = 20000

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if not 0 < self.damping <= 1:
            raise DomainError("damping must lie in (0, 1]")
        if self.linear_solver not in ("direct", "red-black"):
            raise DomainError(f"unknown linear solver {self.linear_solver!r}")


@dataclass
class XiField:
    """Solved sinh-Gordon field on an annulus (z) or square (w) grid."""

    values: np.ndarray
    grid: Union[AnnulusGrid, SquareGrid]
    residual_norm: float
    iterations: int = 0
    end: Optional[EndData] = None
    K_M: Union[float, Callable, None] = None
    _spline: object = field(default=None, repr=False)

    @property
    def n3(self) -> np.ndarray:
        """Vertical component of the unit normal, tanh(xi)."""
        return np.tanh(self.values)

    @property
    def natural(self) -> bool:
        return isinstance(self.grid, SquareGrid)

    def _build_spline(self):
        if self._spline is None:
            if self.natural:
                x = self.grid.x
                self._spline = RectBivariateSpline(x, x, self.values, kx=3, ky=3, s=0)
            else:
                pad = 4
                th = self.grid.theta
                th_ext = np.concatenate([th[-pad:] - 2 * math.pi, th, th[:pad] + 2 * math.pi])
                v_ext = np.concatenate([self.values[:, -pad:], self.values, self.values[:, :pad]], axis=1)
                self._spline = RectBivariateSpline(self.grid.rho, th_ext, v_ext, kx=3, ky=3, s=0)
        return self._spline

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        if self.natural:
            d = pts - self.grid.center
            a = self.grid.half_width * (1 + 1e-12)
            return (np.abs(d.real) <= a) & (np.abs(d.imag) <= a)
        r = np.abs(pts)
        return (r >= self.grid.R_in * (1 - 1e-12)) & (r <= self.grid.R_out * (1 + 1e-12))

    def sample(self, pts):
        """Interpolated (xi, grad xi) at points; the gradient is returned as
        xi_x + i xi_y in the grid's own coordinate (z or w)."""
        pts = np.asarray(pts, dtype=complex)
        if not np.all(self.contains(pts)):
            raise DomainError("sample point outside the solved grid")
        spl = self._build_spline()
        if self.natural:
            d = pts - self.grid.center
            x, y = d.real.ravel(), d.imag.ravel()
            v = spl.ev(x, y)
            g = spl.ev(x, y, dx=1) + 1j * spl.ev(x, y, dy=1)
            return v.reshape(pts.shape), g.reshape(pts.shape)
        rho = np.log(np.abs(pts)).ravel()
        th = np.mod(np.angle(pts), 2 * math.pi).ravel()
        v = spl.ev(rho, th)
        d_rho = spl.ev(rho, th, dx=1)
        d_th = spl.ev(rho, th, dy=1)
        r = np.exp(rho)
        g = np.exp(1j * th) * (d_rho + 1j * d_th) / r
        return v.reshape(pts.shape), g.reshape(pts.shape)


def zero_field(grid, end: Optional[EndData] = None) -> XiField:
    """The trivial solution xi = 0 (vertical tangent planes)."""
    shape = (grid.n, grid.n) if isinstance(grid, SquareGrid) else (grid.n_r, grid.n_theta)
    return XiField(np.zeros(shape), grid, 0.0, 0, end, None)


# ---------------------------------------------------------------------------
# discretisation


class _Problem:
    """Lu - g s sinh(2u) = 0 at interior nodes, Dirichlet elsewhere.

    ``g`` converts the grid Laplacian to Lap_0 (r^2 on the polar grid, 1 on
    the square) and ``s = -2 K_M |phi| >= 0``.
    """

    def __init__(self, grid, s, boundary):
        self.grid = grid
        self.polar = isinstance(grid, AnnulusGrid)
        if self.polar:
            self.shape = (grid.n_r, grid.n_theta)
            self.hx2 = grid.h_rho**2
            self.hy2 = grid.h_theta**2
            self.g = np.broadcast_to((grid.r**2)[:, None], self.shape).copy()
            interior = np.zeros(self.shape, bool)
            interior[1:-1, :] = True
        else:
            self.shape = (grid.n, grid.n)
            self.hx2 = self.hy2 = grid.h**2
            self.g = np.ones(self.shape)
            interior = np.zeros(self.shape, bool)
            interior[1:-1, 1:-1] = True
        self.interior = interior
        self.s = np.broadcast_to(s, self.shape).astype(float)
        self.boundary = boundary
        self.idx = -np.ones(self.shape, dtype=np.int64)
        self.idx[interior] = np.arange(int(interior.sum()))
        self._L = None

    def lap(self, u):
        """Grid Laplacian (not scaled by g) at every node; boundary rows are junk."""
        out = np.zeros_like(u)
        out[1:-1, :] = (u[2:, :] - 2 * u[1:-1, :] + u[:-2, :]) / self.hx2
        if self.polar:
            out += (np.roll(u, -1, axis=1) - 2 * u + np.roll(u, 1, axis=1)) / self.hy2
        else:
            out[:, 1:-1] += (u[:, 2:] - 2 * u[:, 1:-1] + u[:, :-2]) / self.hy2
        return out

    def F(self, u):
        return self.lap(u) - self.g * self.s * np.sinh(2 * u)

    def residual0(self, u):
        """Residual of Lap_0 u + 2 K_M sinh(2u)|phi| at interior nodes."""
        r = self.F(u) / self.g
        return np.where(self.interior, r, 0.0)

    def laplacian_matrix(self):
        if self._L is not None:
            return self._L
        n_r, n_t = self.shape
        rows, cols, vals = [], [], []
        I, J = np.nonzero(self.interior)
        me = self.idx[I, J]
        rows.append(me)
        cols.append(me)
        vals.append(np.full(len(me), -2 / self.hx2 - 2 / self.hy2))
        nbrs = [(I + 1, J, self.hx2), (I - 1, J, self.hx2)]
        if self.polar:
            nbrs += [(I, (J + 1) % n_t, self.hy2), (I, (J - 1) % n_t, self.hy2)]
        else:
            nbrs += [(I, J + 1, self.hy2), (I, J - 1, self.hy2)]
        for a, b, h2 in nbrs:
            k = self.idx[a, b]
            ok = k >= 0
            rows.append(me[ok])
            cols.append(k[ok])
            vals.append(np.full(int(ok.sum()), 1 / h2))
        n = len(me)
        self._L = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        return self._L

    def newton_direct(self, u, Fu):
        gs = (self.g * self.s * 2 * np.cosh(2 * u))[self.interior]
        J = self.laplacian_matrix() - sp.diags(gs)
        d = np.zeros_like(u)
        d[self.interior] = spsolve(J.tocsc(), -Fu[self.interior])
        return d

    def newton_red_black(self, u, Fu, max_sweeps, rel=1e-2):
        """Inexact Newton correction by red-black Gauss-Seidel sweeps."""
        diag = -2 / self.hx2 - 2 / self.hy2 - self.g * self.s * 2 * np.cosh(2 * u)
        rhs = -Fu
        d = np.zeros_like(u)
        ii, jj = np.indices(self.shape)
        colors = [((ii + jj) % 2 == c) & self.interior for c in (0, 1)]
        target = rel * np.max(np.abs(rhs[self.interior]))
        for sweep in range(max_sweeps):
            for mask in colors:
                off = self.lap(d) - (-2 / self.hx2 - 2 / self.hy2) * d
                d = np.where(mask, (rhs - off) / diag, d)
            if sweep % 10 == 9:
                lin = self.lap(d) - self.g * self.s * 2 * np.cosh(2 * u) * d - rhs
                if np.max(np.abs(lin[self.interior])) < target:
                    break
        return d


def _newton(problem: _Problem, u0, cfg: SolverConfig):
    u = np.where(problem.interior, u0, problem.boundary)
    res = problem.residual0(u)
    norm = float(np.max(np.abs(res)))
    it = 0
    while norm >= cfg.tol:
        if it >= cfg.max_iter:
            raise NoConvergenceError(f"residual {norm:.3e} after {it} Newton steps")
        Fu = problem.F(u)
        if cfg.linear_solver == "direct":
            d = problem.newton_direct(u, Fu)
        else:
            if problem.polar and problem.shape[1] % 2:
                raise DomainError("red-black sweeps need an even number of angular nodes")
            d = problem.newton_red_black(u, Fu, cfg.max_sweeps)
        lam = 1.0
        while True:
            trial = u + lam * d
            if np.max(np.abs(trial)) > cfg.xi_cap:
                t_norm = math.inf
            else:
                t_norm = float(np.max(np.abs(problem.residual0(trial))))
            if t_norm < norm or lam < 1e-6:
                break
            lam *= cfg.damping
        if np.max(np.abs(trial)) > cfg.xi_cap:
            raise UnstableSolveError(f"|xi| exceeded cap {cfg.xi_cap}")
        if not t_norm < norm:
            raise NoConvergenceError(f"line search stalled at residual {norm:.3e}")
        u, norm = trial, t_norm
        it += 1
    return u, norm, it


def _inner_values(bc, theta):
    if callable(bc):
        return np.asarray(bc(theta), dtype=float) * np.ones_like(theta)
    arr = np.asarray(bc, dtype=float)
    if arr.ndim == 0:
        return np.full_like(theta, float(arr))
    if arr.shape != theta.shape:
        raise DomainError("bc_inner array must have one value per angular node")
    return arr


def _curvature_at(K_M, pts):
    K = np.asarray(K_M(pts) if callable(K_M) else K_M, dtype=float)
    K = np.broadcast_to(K, pts.shape)
    if np.any(K >= 0):
        raise DomainError("K_M must be negative")
    return K


def solve_xi(
    end: EndData,
    K_M,
    grid: AnnulusGrid,
    cfg: SolverConfig = SolverConfig(),
    initial: Optional[np.ndarray] = None,
) -> XiField:
    """Solve Lap_0 xi = -2 K_M sinh(2 xi) |phi| on the annulus grid.

    Dirichlet data: ``cfg.bc_inner`` on |z| = R_in (scalar, per-node array or
    callable of theta) and ``cfg.bc_outer`` on |z| = R_out.
    """
    if grid.R_in < end.R * (1 - 1e-12):
        raise DomainError("annulus must lie inside the end domain |z| >= R")
    z = grid.z
    s = -2.0 * _curvature_at(K_M, z) * np.abs(hopf_phi(end, z))
    bnd = np.zeros(z.shape)
    bnd[0, :] = _inner_values(cfg.bc_inner, grid.theta)
    bnd[-1, :] = cfg.bc_outer
    problem = _Problem(grid, s, bnd)
    u0 = np.zeros(z.shape) if initial is None else np.asarray(initial, dtype=float)
    u, norm, it = _newton(problem, u0, cfg)
    return XiField(u, grid, norm, it, end, K_M)


def solve_xi_natural(
    K_M,
    grid: SquareGrid,
    cfg: SolverConfig = SolverConfig(),
    bc=0.0,
    initial: Optional[np.ndarray] = None,
) -> XiField:
    """Solve Lap xi = -2 K_M sinh(2 xi) on a square in natural coordinates.

    ``bc`` is a constant or a callable of the (complex) boundary node w.
    """
    w = grid.w
    s = -2.0 * _curvature_at(K_M, w)
    bnd = np.asarray(bc(w), dtype=float) * np.ones(w.shape) if callable(bc) else np.full(w.shape, float(bc))
    problem = _Problem(grid, s, bnd)
    u0 = np.zeros(w.shape) if initial is None else np.asarray(initial, dtype=float)
    u, norm, it = _newton(problem, u0, cfg)
    return XiField(u, grid, norm, it, None, K_M)


def interior_residual(xi: XiField) -> np.ndarray:
    """Nodewise residual of the discrete equation (zero on boundary nodes)."""
    grid = xi.grid
    if isinstance(grid, SquareGrid):
        s = -2.0 * _curvature_at(xi.K_M, grid.w)
    else:
        s = -2.0 * _curvature_at(xi.K_M, grid.z) * np.abs(hopf_phi(xi.end, grid.z))
    return _Problem(grid, s, xi.values).residual0(xi.values)


# ---------------------------------------------------------------------------
# decay estimates


class DecayFit(NamedTuple):
    c1: float
    C2: float
    r2: float


class GradientDecayFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def _band(grid: AnnulusGrid, band):
    r = grid.r
    lo = grid.R_in + band[0] * (grid.R_out - grid.R_in)
    hi = grid.R_in + band[1] * (grid.R_out - grid.R_in)
    sel = (r >= lo) & (r <= hi)
    if sel.sum() < 3:
        raise DomainError("decay band holds fewer than three rings")
    return sel


def decay_fit(xi: XiField, band=(0.15, 0.6)) -> DecayFit:
    """Fit log sup_{|z|=r} |xi| = log(2 C2) - c1 r over the middle radial band."""
    sel = _band(xi.grid, band)
    sup = np.max(np.abs(xi.values[sel]), axis=1)
    if np.any(sup < 1e-300):
        raise DegenerateFitError("sup |xi| underflows; decay holds trivially")
    fit = linregress(xi.grid.r[sel], np.log(sup))
    return DecayFit(-float(fit.slope), 0.5 * math.exp(fit.intercept), float(fit.rvalue**2))


def _polar_gradient(values, grid: AnnulusGrid, order=2):
    """(xi_x + i xi_y) at rows 2..n_r-3 by central differences of given order."""
    v = values
    hr, ht = grid.h_rho, grid.h_theta
    if order == 2:
        d_rho = (v[3:-1] - v[1:-3]) / (2 * hr)
        d_th = (np.roll(v, -1, 1) - np.roll(v, 1, 1))[2:-2] / (2 * ht)
    else:
        d_rho = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * hr)
        d_th = (-np.roll(v, -2, 1) + 8 * np.roll(v, -1, 1) - 8 * np.roll(v, 1, 1) + np.roll(v, 2, 1))[
            2:-2
        ] / (12 * ht)
    z = grid.z[2:-2]
    return np.exp(1j * np.angle(z)) * (d_rho + 1j * d_th) / np.abs(z)


def gradient_decay_check(xi: XiField, band=(0.15, 0.6), order: int = 2) -> GradientDecayFit:
    """Fit log sup|grad_w xi| against |w|^(1/(m+1)) over the middle band.

    The gradient in natural coordinates is grad_z xi / |sqrt(phi)|.
    """
    if xi.natural:
        raise DomainError("gradient_decay_check expects an annulus field")
    end = xi.end
    grid = xi.grid
    grad_z = _polar_gradient(xi.values, grid, order)
    z = grid.z[2:-2]
    grad_w = np.abs(grad_z) / np.abs(sqrt_phi(end, z))
    w = z ** (end.m + 1) + 1j * end.c * np.log(z)
    x = np.mean(np.abs(w) ** (1.0 / (end.m + 1)), axis=1)
    sup = np.max(grad_w, axis=1)
    r = grid.r[2:-2]
    lo = grid.R_in + band[0] * (grid.R_out - grid.R_in)
    hi = grid.R_in + band[1] * (grid.R_out - grid.R_in)
    sel = (r >= lo) & (r <= hi)
    if sel.sum() < 3:
        raise DomainError("decay band holds fewer than three rings")
    if np.any(sup[sel] < 1e-300):
        raise DegenerateFitError("sup |grad xi| underflows; decay holds trivially")
    fit = linregress(x[sel], np.log(sup[sel]))
    return GradientDecayFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2))


# ---------------------------------------------------------------------------
# barrier


def barrier_psi(C2: float, r: float, x, y):
    """Psi(x, y) = C2 cosh(sqrt2 x) cosh(sqrt2 y) / cosh r, a supersolution
    of Lap Psi = 4 Psi dominating C2 on the boundary of the r-square."""
    if not r > 0:
        raise DomainError("r must be positive")
    s2 = math.sqrt(2.0)
    return C2 / math.cosh(r) * np.cosh(s2 * np.asarray(x)) * np.cosh(s2 * np.asarray(y))


def psi_laplacian_check(C2: float, r: float, x: float, y: float, h: float = 1e-3):
    """|Lap Psi - 4 Psi| from the closed-form second derivatives and from the
    5-point stencil with step h."""
    psi = barrier_psi(C2, r, x, y)
    # Psi_xx = Psi_yy = 2 Psi
    exact = abs(2 * psi + 2 * psi - 4 * psi)
    fd = (
        barrier_psi(C2, r, x + h, y)
        + barrier_psi(C2, r, x - h, y)
        + barrier_psi(C2, r, x, y + h)
        + barrier_psi(C2, r, x, y - h)
        - 4 * psi
    ) / h**2
    return float(exact), float(abs(fd - 4 * psi))


def barrier_bound_check(xi: XiField, C2: float, atol: float = 1e-6) -> bool:
    """|xi(center)| <= Psi(0, 0) = C2 / cosh r on a natural square of half-width r."""
    if not xi.natural:
        raise DomainError("barrier check needs a natural-coordinate field")
    n = xi.grid.n
    if n % 2 == 0:
        raise DomainError("use an odd node count so the center is a node")
    centre = abs(xi.values[n // 2, n // 2])
    return bool(centre <= barrier_psi(C2, xi.grid.half_width, 0.0, 0.0) + atol)
