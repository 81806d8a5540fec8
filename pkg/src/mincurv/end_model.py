"""Model end of a finite-total-curvature minimal surface.

Near a puncture the Hopf differential is normalised to

    phi(z) dz^2 = ((m + 1) z^m + c i / z)^2 dz^2,   |z| >= R,

so ``sqrt(phi)`` is single valued and its primitive

    F(z) = z^(m+1) + c i log z

is multivalued only through the argument.  ``Im F`` is global; ``Re F``
needs a branch of ``arg z``, chosen on one of the overlapping sectors
``Delta_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import BranchError, DomainError, RootCountError, SingularityError

__all__ = [
    "BranchDomain",
    "EndData",
    "LevelCurve",
    "branch_F",
    "branch_argument",
    "branch_domain",
    "growth_constant",
    "hopf_phi",
    "im_F",
    "level_band",
    "level_curve_re_F",
    "profile_counts",
    "sqrt_phi",
    "trace_level_curves",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class EndData:
    """Normal-form data (m, c, R) of one end."""

    m: int
    c: float
    R: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise DomainError(f"m must be a nonnegative integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "R", float(self.R))
        if not self.R > 0:
            raise DomainError("R must be positive")
        if not self.radius_ok:
            raise DomainError(
                f"R^(m+1) = {self.R ** (self.m + 1):.6g} must exceed "
                f"1 + 4 pi |c| / cos(pi/10) = {self.radius_threshold:.6g}"
            )

    @property
    def radius_threshold(self) -> float:
        return 1.0 + 4.0 * math.pi * abs(self.c) / math.cos(math.pi / 10)

    @property
    def radius_ok(self) -> bool:
        return self.R ** (self.m + 1) > self.radius_threshold

    @property
    def n_sectors(self) -> int:
        return 2 * (self.m + 1)

    @classmethod
    def from_dict(cls, data: dict) -> "EndData":
        unknown = set(data) - {"m", "c", "R"}
        if unknown:
            raise DomainError(f"unknown end keys: {sorted(unknown)}")
        return cls(data["m"], data.get("c", 0.0), data["R"])

    def to_dict(self) -> dict:
        return {"m": self.m, "c": self.c, "R": self.R}


@dataclass(frozen=True)
class BranchDomain:
    """Sector Delta_k with its argument interval [arg_lo, arg_hi]."""

    k: int
    m: int

    @property
    def arg_lo(self) -> float:
        return self.k * math.pi / (self.m + 1) - math.pi / (10 * (self.m + 1))

    @property
    def arg_hi(self) -> float:
        return (self.k + 1) * math.pi / (self.m + 1) + math.pi / (10 * (self.m + 1))

    def contains(self, z, slack: float = 0.0) -> np.ndarray:
        theta = np.angle(z)
        lo = self.arg_lo - slack
        span = self.arg_hi + slack - lo
        return np.mod(theta - lo, TWO_PI) <= span


def branch_domain(end: EndData, k: int) -> BranchDomain:
    if not 0 <= k < end.n_sectors:
        raise DomainError(f"sector index {k} outside 0..{end.n_sectors - 1}")
    return BranchDomain(int(k), end.m)


def level_band(end: EndData, k: int) -> Tuple[float, float]:
    """Angular band k pi/(m+1) +- pi/(10(m+1)) containing l_k."""
    mid = k * math.pi / (end.m + 1)
    half = math.pi / (10 * (end.m + 1))
    return mid - half, mid + half


def _check_nonzero(z):
    if np.any(np.asarray(z) == 0):
        raise SingularityError("phi is singular at z = 0")


def sqrt_phi(end: EndData, z):
    """(m+1) z^m + c i / z, the branch with positive leading coefficient."""
    z = np.asarray(z, dtype=complex)
    _check_nonzero(z)
    out = (end.m + 1) * z**end.m + 1j * end.c / z
    return out if out.ndim else complex(out)


def hopf_phi(end: EndData, z):
    """phi(z) = ((m+1) z^m + c i / z)^2."""
    s = sqrt_phi(end, z)
    return s * s


def im_F(end: EndData, z):
    """Im F = c log|z| + Im z^(m+1); globally defined on the punctured plane."""
    z = np.asarray(z, dtype=complex)
    out = end.c * np.log(np.abs(z)) + (z ** (end.m + 1)).imag
    return out if out.ndim else float(out)


def branch_argument(dom: BranchDomain, z):
    """Representative of arg z inside [arg_lo, arg_hi], else BranchError."""
    z = np.asarray(z, dtype=complex)
    theta = dom.arg_lo + np.mod(np.angle(z) - dom.arg_lo, TWO_PI)
    if np.any(theta > dom.arg_hi + 1e-12):
        raise BranchError(f"arg z has no representative in sector {dom.k}")
    return theta if theta.ndim else float(theta)


def _F_with_theta(end: EndData, z, theta):
    return z ** (end.m + 1) + 1j * end.c * (np.log(np.abs(z)) + 1j * theta)


def branch_F(end: EndData, dom: BranchDomain, z, check_radius: bool = True):
    """F_k(z) = z^(m+1) + c i (log|z| + i theta), theta taken in sector k."""
    z = np.asarray(z, dtype=complex)
    _check_nonzero(z)
    if check_radius and np.any(np.abs(z) < end.R * (1 - 1e-12)):
        raise DomainError("branch_F is defined on |z| >= R")
    theta = branch_argument(dom, z)
    out = _F_with_theta(end, z, theta)
    return out if np.ndim(out) else complex(out)


@dataclass(frozen=True)
class LevelCurve:
    """Sampled component l_k of (Im F)^{-1}(0), ordered outward from |z| = R."""

    k: int
    samples: np.ndarray

    def __len__(self):
        return len(self.samples)


def _circle_roots(end: EndData) -> List[float]:
    R, m, c = end.R, end.m, end.c
    roots = []
    for k in range(end.n_sectors):
        lo, hi = level_band(end, k)

        def g(theta):
            return c * math.log(R) + R ** (m + 1) * math.sin((m + 1) * theta)

        glo, ghi = g(lo), g(hi)
        if glo == 0.0:
            roots.append(lo)
        elif ghi == 0.0:
            roots.append(hi)
        elif glo * ghi > 0:
            raise RootCountError(f"no root of Im F in band {k} on |z| = R; radius too small")
        else:
            roots.append(brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    # Im F(R e^{i theta}) = 0 <=> sin((m+1) theta) = const has exactly 2(m+1) roots
    if abs(c * math.log(R)) >= R ** (m + 1):
        raise RootCountError("Im F has no roots on |z| = R")
    return roots


def _correct_onto_level(end, z, tol, max_iter=30):
    for _ in range(max_iter):
        v = im_F(end, z)
        d = sqrt_phi(end, z)
        scale = 1.0 + abs(z ** (end.m + 1)) + abs(end.c * math.log(abs(z)))
        if abs(v) < tol * scale:
            return z
        # Newton along grad(Im F) = i conj(F')
        z = z - v * 1j * np.conj(d) / (abs(d) ** 2)
    raise RootCountError("level-curve corrector failed to converge")


def trace_level_curves(
    end: EndData,
    r_max: float = None,
    step_frac: float = 0.01,
    tol: float = 1e-12,
) -> List[LevelCurve]:
    """Trace the 2(m+1) components of Im F = 0 from |z| = R out to r_max.

    For ``c == 0`` the components are the rays arg z = k pi/(m+1) and are
    emitted exactly.  Otherwise each component is followed by an Euler
    predictor along the level tangent conj(F')/|F'| and a Newton corrector
    along grad(Im F).
    """
    if r_max is None:
        r_max = 8.0 * end.R
    if r_max <= end.R:
        raise DomainError("r_max must exceed R")
    nsteps = int(math.ceil(math.log(r_max / end.R) / math.log1p(step_frac)))
    curves = []
    if end.c == 0.0:
        radii = end.R * np.exp(np.linspace(0.0, math.log(r_max / end.R), nsteps + 1))
        for k in range(end.n_sectors):
            curves.append(LevelCurve(k, radii * np.exp(1j * k * math.pi / (end.m + 1))))
        return curves

    for k, theta0 in enumerate(_circle_roots(end)):
        z = end.R * complex(math.cos(theta0), math.sin(theta0))
        pts = [z]
        lo, hi = level_band(end, k)
        while abs(z) < r_max:
            d = np.conj(sqrt_phi(end, z))
            t = d / abs(d)
            if (t * np.conj(z)).real < 0:
                t = -t
            z = _correct_onto_level(end, z + step_frac * abs(z) * t, tol)
            pts.append(z)
        samples = np.array(pts)
        theta = np.angle(samples * np.exp(-1j * k * math.pi / (end.m + 1))) + k * math.pi / (end.m + 1)
        if np.any(theta < lo) or np.any(theta > hi):
            raise RootCountError(f"level curve {k} left its angular band")
        curves.append(LevelCurve(k, samples))
    return curves


def level_curve_re_F(end: EndData, curve: LevelCurve) -> np.ndarray:
    """Re F along l_k with arg z taken next to k pi/(m+1)."""
    mid = curve.k * math.pi / (end.m + 1)
    theta = np.angle(curve.samples * np.exp(-1j * mid)) + mid
    return _F_with_theta(end, curve.samples, theta).real


def profile_counts(end) -> Tuple[int, int, int]:
    """Asymptotic profile of an end: (top geodesics, bottom geodesics, vertical lines)."""
    m = end.m if isinstance(end, EndData) else int(end)
    if m < 0:
        raise DomainError("m must be nonnegative")
    return m + 1, m + 1, 2 * (m + 1)


def growth_constant(end: EndData, r_star: float, r_max: float, n_r: int = 64, n_theta: int = 256) -> float:
    """Smallest C* with C*^-1 |z|^(m+1) <= |F_k(z)| <= C* |z|^(m+1) on the sampled
    region r_star <= |z| <= r_max, maximised over all sectors."""
    radii = np.geomspace(r_star, r_max, n_r)
    worst = 1.0
    for k in range(end.n_sectors):
        dom = BranchDomain(k, end.m)
        theta = np.linspace(dom.arg_lo, dom.arg_hi, n_theta)
        z = radii[:, None] * np.exp(1j * theta[None, :])
        ratio = np.abs(_F_with_theta(end, z, theta[None, :])) / radii[:, None] ** (end.m + 1)
        worst = max(worst, float(ratio.max()), float(1.0 / ratio.min()))
    # strict inequalities on the sampled set
    return worst * (1.0 + 1e-9)
