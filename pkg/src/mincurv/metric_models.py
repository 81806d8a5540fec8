"""Conformal disc metrics on a Hadamard surface and warped polar metrics.

A Hadamard surface is modelled on the unit disc with

    sigma(z)^2 |dz|^2,   sigma(z) = 2 alpha(z) / (1 - |z|^2),

where ``alpha`` is bounded between two positive constants.  Warped polar
metrics ``ds^2 + G(s, theta) dtheta^2`` are used by the catenoid comparison
code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, StencilError

__all__ = [
    "ConformalDiscMetric",
    "CurvatureBounds",
    "PinchingReport",
    "WarpedPolarMetric",
    "disc_samples",
    "gauss_curvature",
    "sigma_at",
    "verify_pinching",
]


@dataclass(frozen=True)
class ConformalDiscMetric:
    """Conformal factor ``alpha`` on the open unit disc.

    Use :meth:`constant`, :meth:`poly_r2` or :meth:`from_callable` rather than
    the raw constructor.  ``alpha`` must accept complex numpy arrays.
    """

    alpha: Callable[[np.ndarray], np.ndarray]
    alpha_min: float
    alpha_max: float
    kind: str = "callable"
    params: tuple = ()

    def __post_init__(self):
        if not self.alpha_min > 0:
            raise DomainError("alpha_min must be positive")
        if self.alpha_max < self.alpha_min:
            raise DomainError("alpha_max < alpha_min")

    @classmethod
    def constant(cls, value: float) -> "ConformalDiscMetric":
        value = float(value)
        if value <= 0:
            raise DomainError("constant alpha must be positive")
        return cls(lambda z: np.full(np.shape(z), value), value, value, "const", (value,))

    @classmethod
    def poly_r2(cls, coeffs) -> "ConformalDiscMetric":
        """alpha(z) = sum_j coeffs[j] * |z|^(2j)."""
        coeffs = tuple(float(c) for c in coeffs)
        if not coeffs:
            raise DomainError("poly_r2 needs at least one coefficient")
        rev = coeffs[::-1]

        def alpha(z):
            return np.polyval(rev, np.abs(z) ** 2)

        t = np.linspace(0.0, 1.0, 4001)
        vals = np.polyval(rev, t)
        return cls(alpha, float(vals.min()), float(vals.max()), "poly_r2", coeffs)

    @classmethod
    def from_callable(cls, alpha, alpha_min, alpha_max) -> "ConformalDiscMetric":
        return cls(alpha, float(alpha_min), float(alpha_max), "callable", ())

    @classmethod
    def from_dict(cls, data: dict) -> "ConformalDiscMetric":
        """Build from the JSON form ``{"kind": "const", "value": v}`` or
        ``{"kind": "poly_r2", "coeffs": [...]}``."""
        kind = data.get("kind")
        if kind == "const":
            return cls.constant(data["value"])
        if kind == "poly_r2":
            return cls.poly_r2(data["coeffs"])
        raise DomainError(f"unknown alpha kind {kind!r}")

    def check_bounds(self, samples) -> bool:
        vals = np.asarray(self.alpha(np.asarray(samples, dtype=complex)), dtype=float)
        return bool(np.all(vals >= self.alpha_min) and np.all(vals <= self.alpha_max))


@dataclass(frozen=True)
class CurvatureBounds:
    """Pinching constants: -a^2 <= K <= -b^2 with 0 < b <= a."""

    a: float
    b: float

    def __post_init__(self):
        if not (0 < self.b <= self.a):
            raise DomainError(f"need 0 < b <= a, got a={self.a}, b={self.b}")

    @property
    def k_min(self) -> float:
        return -self.a**2

    @property
    def k_max(self) -> float:
        return -self.b**2


def sigma_at(metric: ConformalDiscMetric, z):
    """Hyperbolic-type conformal factor 2 alpha(z) / (1 - |z|^2)."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    if np.any(r2 >= 1.0):
        raise DomainError("sigma is only defined on the open unit disc")
    out = 2.0 * np.asarray(metric.alpha(z), dtype=float) / (1.0 - r2)
    return out if out.ndim else float(out)


def _log_sigma(metric, z):
    return np.log(sigma_at(metric, z))


def gauss_curvature(metric: ConformalDiscMetric, z, h: float = 1e-3):
    """Curvature -Lap(log sigma)/sigma^2 with the 5-point stencil of step h.

    ``h`` may be an array broadcasting against ``z``.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise DomainError("step h must be positive")
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) + 2 * h >= 1.0):
        raise StencilError("stencil leaves the unit disc")
    lap = (
        _log_sigma(metric, z + h)
        + _log_sigma(metric, z - h)
        + _log_sigma(metric, z + 1j * h)
        + _log_sigma(metric, z - 1j * h)
        - 4.0 * _log_sigma(metric, z)
    ) / h**2
    out = -lap / np.asarray(sigma_at(metric, z)) ** 2
    return out if np.ndim(out) else float(out)


def disc_samples(n: int = 21, r_max: float = 0.95) -> np.ndarray:
    """Cartesian grid of sample points clipped to |z| <= r_max."""
    x = np.linspace(-r_max, r_max, n)
    zz = (x[:, None] + 1j * x[None, :]).ravel()
    return zz[np.abs(zz) <= r_max]


@dataclass
class PinchingReport:
    samples: np.ndarray
    curvature: np.ndarray
    k_min: float
    k_max: float
    tol: float
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def rows(self):
        """(z_re, z_im, K, pass) rows for CSV export."""
        ok = (self.curvature >= self.k_min - self.tol) & (self.curvature <= self.k_max + self.tol)
        return [
            (float(z.real), float(z.imag), float(k), bool(p))
            for z, k, p in zip(self.samples, self.curvature, ok)
        ]


def verify_pinching(
    metric: ConformalDiscMetric,
    bounds: CurvatureBounds,
    samples=None,
    h: float = 1e-3,
    tol: Optional[float] = None,
) -> PinchingReport:
    """List samples whose curvature leaves [-a^2 - tol, -b^2 + tol].

    The stencil step at z is h (1 - |z|^2), a fixed step in the hyperbolic
    length scale, so the truncation error does not grow towards |z| = 1.
    ``tol`` defaults to 10 h^2.  Violations are data; nothing is raised for
    a failing metric.
    """
    if samples is None:
        samples = disc_samples()
    samples = np.asarray(samples, dtype=complex).ravel()
    if np.any(np.abs(samples) >= 1.0):
        raise DomainError("pinching samples must lie inside the disc")
    if tol is None:
        tol = 10.0 * h**2
    K = np.atleast_1d(gauss_curvature(metric, samples, h * (1.0 - np.abs(samples) ** 2)))
    bad = np.flatnonzero((K < bounds.k_min - tol) | (K > bounds.k_max + tol))
    violations = [(complex(samples[i]), float(K[i])) for i in bad]
    return PinchingReport(samples, K, bounds.k_min, bounds.k_max, tol, violations)


def _fd1(f, s, h):
    return (f(s - 2 * h) - 8 * f(s - h) + 8 * f(s + h) - f(s + 2 * h)) / (12 * h)


def _fd2(f, s, h):
    return (-f(s - 2 * h) + 16 * f(s - h) - 30 * f(s) + 16 * f(s + h) - f(s + 2 * h)) / (12 * h * h)


@dataclass(frozen=True)
class WarpedPolarMetric:
    """Polar metric ds^2 + G(s) dtheta^2, described through sqrt(G).

    Rotationally symmetric profiles are enough for the catenoid comparison;
    ``theta`` arguments are accepted and ignored.  Derivatives fall back to
    fourth-order finite differences when not supplied.
    """

    sqrt_g: Callable
    sqrt_g_s: Optional[Callable] = None
    sqrt_g_ss: Optional[Callable] = None
    k: Optional[float] = None
    label: str = "callable"
    fd_step: float = 1e-4

    @classmethod
    def hyperbolic(cls, k: float) -> "WarpedPolarMetric":
        """G = sinh^2(k s), the polar metric of H^2(-k^2)."""
        k = float(k)
        if k <= 0:
            raise DomainError("k must be positive")
        return cls(
            lambda s: np.sinh(k * s),
            lambda s: k * np.cosh(k * s),
            lambda s: k * k * np.sinh(k * s),
            k=k,
            label=f"sinh2(k={k:g})",
        )

    @classmethod
    def perturbed_hyperbolic(cls, k0: float, eps: float, freq: float = 1.0) -> "WarpedPolarMetric":
        """G = sinh^2(k0 s) (1 + eps sin(freq s))."""
        k0, eps, freq = float(k0), float(eps), float(freq)

        def q(s):
            return np.sqrt(1.0 + eps * np.sin(freq * s))

        def q1(s):
            return eps * freq * np.cos(freq * s) / (2.0 * q(s))

        def q2(s):
            qq = q(s)
            return (-eps * freq**2 * np.sin(freq * s) / (2.0 * qq)) - (
                eps * freq * np.cos(freq * s)
            ) ** 2 / (4.0 * qq**3)

        def f(s):
            return np.sinh(k0 * s) * q(s)

        def f1(s):
            return k0 * np.cosh(k0 * s) * q(s) + np.sinh(k0 * s) * q1(s)

        def f2(s):
            return (
                k0 * k0 * np.sinh(k0 * s) * q(s)
                + 2 * k0 * np.cosh(k0 * s) * q1(s)
                + np.sinh(k0 * s) * q2(s)
            )

        return cls(f, f1, f2, label=f"sinh2(k={k0:g})*(1+{eps:g}sin({freq:g}s))")

    @classmethod
    def from_dict(cls, data: dict) -> "WarpedPolarMetric":
        kind = data.get("kind")
        if kind == "sinh2":
            return cls.hyperbolic(data["k"])
        if kind == "perturbed_sinh2":
            return cls.perturbed_hyperbolic(data["k"], data["eps"], data.get("freq", 1.0))
        raise DomainError(f"unknown G kind {kind!r}")

    def G(self, s, theta=None):
        return np.asarray(self.sqrt_g(s)) ** 2

    def G_s(self, s, theta=None):
        d1 = self.sqrt_g_s(s) if self.sqrt_g_s else _fd1(self.sqrt_g, s, self.fd_step)
        return 2.0 * np.asarray(self.sqrt_g(s)) * d1

    def log_derivative(self, s, theta=None):
        """G_s / G."""
        d1 = self.sqrt_g_s(s) if self.sqrt_g_s else _fd1(self.sqrt_g, s, self.fd_step)
        return 2.0 * d1 / np.asarray(self.sqrt_g(s))

    def curvature(self, s, theta=None):
        """K = -(sqrt G)_ss / sqrt G."""
        d2 = self.sqrt_g_ss(s) if self.sqrt_g_ss else _fd2(self.sqrt_g, s, self.fd_step)
        return -d2 / np.asarray(self.sqrt_g(s))
