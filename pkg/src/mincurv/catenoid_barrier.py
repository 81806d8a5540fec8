"""Rotational catenoids in H^2(-k^2) x R and comparison in warped metrics.

The catenoid of flux A in H^2(-k^2) x R is the rotation graph of

    h_{A,k}(s) = int_{R_{A,k}}^s A / sqrt(sinh^2(k r) - A^2) dr,
    R_{A,k} = arcsinh(A) / k.

For a rotational graph z = h(s) in ds^2 + G(s) dtheta^2 + dz^2 the mean
curvature is

    2H = (2 G h'' + (1 + h'^2) h' G_s) / (2 G (1 + h'^2)^(3/2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, PreconditionFailError
from .metric_models import WarpedPolarMetric

__all__ = [
    "CatenoidProfile",
    "ComparisonReport",
    "MeanCurvatureSample",
    "RatioReport",
    "comparison_signs",
    "fermi_barrier",
    "fermi_barrier_prime",
    "h_prime",
    "h_second",
    "height_profile",
    "mean_curvature",
    "ode_residual",
    "pinching_precheck",
    "ratio_inequality",
]

SIGN_DEADBAND = 1e-10
PINCH_TOL = 1e-8


@dataclass(frozen=True)
class CatenoidProfile:
    A: float
    k: float

    def __post_init__(self):
        if not self.A > 0 or not self.k > 0:
            raise DomainError("A and k must be positive")
        object.__setattr__(self, "A", float(self.A))
        object.__setattr__(self, "k", float(self.k))

    @property
    def R_neck(self) -> float:
        return math.asinh(self.A) / self.k


def _gap(p: CatenoidProfile, s):
    """sinh^2(k s) - A^2 written without cancellation near the neck."""
    R = p.R_neck
    return np.sinh(p.k * (s - R)) * np.sinh(p.k * (s + R))


def _check_above_neck(p: CatenoidProfile, s, strict: bool):
    s = np.asarray(s, dtype=float)
    bad = s <= p.R_neck if strict else s < p.R_neck
    if np.any(bad):
        raise DomainError(f"s must be {'>' if strict else '>='} R_neck = {p.R_neck:.12g}")
    return s


def h_prime(p: CatenoidProfile, s):
    """A / sqrt(sinh^2(k s) - A^2)."""
    s = _check_above_neck(p, s, strict=True)
    out = p.A / np.sqrt(_gap(p, s))
    return out if out.ndim else float(out)


def h_second(p: CatenoidProfile, s):
    """-A k sinh(k s) cosh(k s) / (sinh^2(k s) - A^2)^(3/2)."""
    s = _check_above_neck(p, s, strict=True)
    out = -p.A * p.k * np.sinh(p.k * s) * np.cosh(p.k * s) / _gap(p, s) ** 1.5
    return out if out.ndim else float(out)


def ode_residual(p: CatenoidProfile, s):
    """sinh(k s) h'' + k cosh(k s) (1 + h'^2) h', zero for the catenoid."""
    s = np.asarray(s, dtype=float)
    hp, hpp = h_prime(p, s), h_second(p, s)
    out = np.sinh(p.k * s) * hpp + p.k * np.cosh(p.k * s) * (1 + hp**2) * hp
    return out if np.ndim(out) else float(out)


def height_profile(p: CatenoidProfile, s: float, epsabs: float = 1e-13) -> float:
    """h_{A,k}(s) by adaptive quadrature after r = R_neck + t^2."""
    s = float(_check_above_neck(p, s, strict=False))
    R, k, A = p.R_neck, p.k, p.A
    if s == R:
        return 0.0
    limit0 = 2 * A / math.sqrt(k * math.sinh(2 * k * R))

    def integrand(t):
        if t == 0.0:
            return limit0
        u = k * t * t
        # t / sqrt(sinh(k t^2)) stays bounded as t -> 0
        return 2 * A / math.sqrt(math.sinh(u) / (t * t) * math.sinh(k * (2 * R + t * t)))

    val, _ = quad(integrand, 0.0, math.sqrt(s - R), epsabs=epsabs, epsrel=1e-13, limit=200)
    return float(val)


class MeanCurvatureSample(NamedTuple):
    s: float
    H2: float
    sign: int
    numerator: float


def _sign(x: float, scale: float = 1.0) -> int:
    if abs(x) <= SIGN_DEADBAND * max(scale, 1.0):
        return 0
    return 1 if x > 0 else -1


def mean_curvature(G: WarpedPolarMetric, hp: float, hpp: float, s: float) -> MeanCurvatureSample:
    """2H of the rotational graph with h'(s) = hp, h''(s) = hpp."""
    g, gs = float(G.G(s)), float(G.G_s(s))
    if not g > 0:
        raise DomainError("G must be positive at s")
    one = 1.0 + hp * hp
    num = 2 * g * hpp + one * hp * gs
    H2 = num / (2 * g * one**1.5)
    scale = (abs(2 * g * hpp) + abs(one * hp * gs)) / (2 * g * one**1.5)
    return MeanCurvatureSample(float(s), float(H2), _sign(H2, scale) if scale else 0, float(num))


def pinching_precheck(G: WarpedPolarMetric, k1: float, k2: float, samples, tol: float = PINCH_TOL):
    """-k1^2 - tol <= K(s) <= -k2^2 + tol on every sample, else PreconditionFailError."""
    if not 0 < k2 < k1:
        raise DomainError("need 0 < k2 < k1")
    s = np.asarray(samples, dtype=float)
    K = np.asarray(G.curvature(s), dtype=float)
    bad = (K < -k1 * k1 - tol) | (K > -k2 * k2 + tol)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise PreconditionFailError(
            f"curvature {K[i]:.6g} at s = {s[i]:.6g} outside [-{k1}^2, -{k2}^2]"
        )
    return K


@dataclass
class ComparisonReport:
    samples: np.ndarray
    num_k1: np.ndarray
    num_k2: np.ndarray
    status_k1: List[str]
    status_k2: List[str]

    @property
    def k1_outward(self) -> bool:
        return all(st == "PASS" for st in self.status_k1)

    @property
    def k2_inward(self) -> bool:
        return all(st == "PASS" for st in self.status_k2)

    @property
    def passed(self) -> bool:
        return self.k1_outward and self.k2_inward

    @property
    def boundary(self) -> bool:
        return "BOUNDARY" in self.status_k1 or "BOUNDARY" in self.status_k2


def _numerator(G, p: CatenoidProfile, s):
    hp, hpp = h_prime(p, s), h_second(p, s)
    g, gs = G.G(s), G.G_s(s)
    one = 1 + hp * hp
    a, b = 2 * g * hpp, one * hp * gs
    return a + b, np.abs(a) + np.abs(b)


def _status(num, scale, want: int) -> List[str]:
    out = []
    for n, sc in zip(num, scale):
        sg = 0 if abs(n) <= SIGN_DEADBAND * sc else (1 if n > 0 else -1)
        out.append("BOUNDARY" if sg == 0 else ("PASS" if sg == want else "FAIL"))
    return out


def comparison_signs(
    G: WarpedPolarMetric, bounds, A: float, samples: Optional[Sequence[float]] = None, n: int = 1000
) -> ComparisonReport:
    """Sign of the 2H numerator of h_{A,k1} (want < 0) and h_{A,k2} (want > 0) in G.

    Default samples are n points on (R_{A,k2}, R_{A,k2} + 5].
    """
    k1, k2 = (float(b) for b in bounds)
    p1, p2 = CatenoidProfile(A, k1), CatenoidProfile(A, k2)
    if samples is None:
        samples = p2.R_neck + np.linspace(0.0, 5.0, n + 1)[1:]
    s = np.asarray(samples, dtype=float)
    if np.any(s <= p2.R_neck):
        raise DomainError("samples must lie beyond both catenoid necks")
    pinching_precheck(G, k1, k2, s)
    n1, sc1 = _numerator(G, p1, s)
    n2, sc2 = _numerator(G, p2, s)
    return ComparisonReport(s, n1, n2, _status(n1, sc1, -1), _status(n2, sc2, 1))


@dataclass
class RatioReport:
    samples: np.ndarray
    margin_upper: np.ndarray  # G1_s/G1 - G_s/G
    margin_lower: np.ndarray  # G_s/G - G2_s/G2

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margin_upper > 0) and np.all(self.margin_lower > 0))

    @property
    def min_margin(self) -> float:
        return float(min(self.margin_upper.min(), self.margin_lower.min()))


def ratio_inequality(
    G: WarpedPolarMetric, k1: float, k2: float, samples: Optional[Sequence[float]] = None, n: int = 1000
) -> RatioReport:
    """Margins of 2 k1 coth(k1 s) > G_s / G > 2 k2 coth(k2 s).

    Default samples are n points on [0.05, 5].
    """
    if samples is None:
        samples = np.linspace(0.05, 5.0, n)
    s = np.asarray(samples, dtype=float)
    if np.any(s < 0.05):
        raise DomainError("samples must satisfy s >= 0.05")
    pinching_precheck(G, k1, k2, s)
    ld = np.asarray(G.log_derivative(s), dtype=float)
    up = 2 * k1 / np.tanh(k1 * s) - ld
    lo = ld - 2 * k2 / np.tanh(k2 * s)
    return RatioReport(s, up, lo)


def fermi_barrier(k: float, s, b: Optional[float] = None):
    """f(s) = log(tanh(k s / 2)) / k for s > 0."""
    if not k > 0:
        raise DomainError("k must be positive")
    if b is not None and not k < b:
        raise DomainError("k must lie in (0, b)")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("fermi_barrier needs s > 0")
    out = np.log(np.tanh(0.5 * k * s)) / k
    return out if out.ndim else float(out)


def fermi_barrier_prime(k: float, s):
    """f'(s) = 1 / sinh(k s)."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("fermi_barrier needs s > 0")
    out = 1.0 / np.sinh(k * s)
    return out if out.ndim else float(out)
