import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from mincurv.errors import DomainError, StencilError
from mincurv.metric_models import (
    ConformalDiscMetric,
    CurvatureBounds,
    WarpedPolarMetric,
    disc_samples,
    gauss_curvature,
    sigma_at,
    verify_pinching,
)


def _sympy_curvature(coeffs):
    """Exact -Lap(log sigma) / sigma^2 for alpha = sum c_j r^(2j)."""
    x, y = sp.symbols("x y", real=True)
    r2 = x**2 + y**2
    alpha = sum(sp.Rational(c).limit_denominator(10**6) * r2**j for j, c in enumerate(coeffs))
    sigma = 2 * alpha / (1 - r2)
    ls = sp.log(sigma)
    K = -(sp.diff(ls, x, 2) + sp.diff(ls, y, 2)) / sigma**2
    return sp.lambdify((x, y), sp.simplify(K), "numpy")


def test_constant_alpha_is_hyperbolic():
    m = ConformalDiscMetric.constant(1.0)
    z = np.array([0.0, 0.3 + 0.2j, -0.5j])
    assert np.allclose(gauss_curvature(m, z), -1.0, atol=1e-5)


def test_poly_alpha_matches_symbolic_curvature():
    coeffs = (1.0, 0.1)
    m = ConformalDiscMetric.poly_r2(coeffs)
    K_exact = _sympy_curvature(coeffs)
    z = np.array([0.4, 0.3 + 0.1j, -0.2 + 0.5j, 0.6j])
    K_fd = gauss_curvature(m, z, h=1e-3)
    assert np.max(np.abs(K_fd - K_exact(z.real, z.imag))) < 1e-5


def test_pinching_scan_matches_symbolic_curvature_near_boundary():
    coeffs = (1.0, 0.1)
    K_exact = _sympy_curvature(coeffs)
    h = 1e-3
    rep = verify_pinching(ConformalDiscMetric.poly_r2(coeffs), CurvatureBounds(2.0, 0.1), h=h)
    z = rep.samples
    assert np.max(np.abs(z)) > 0.94
    assert np.max(np.abs(rep.curvature - K_exact(z.real, z.imag))) < 10 * h**2


def test_curvature_convergence_order():
    k = 1.5
    m = ConformalDiscMetric.constant(1.0 / k)
    z = 0.4 + 0.3j
    errs = [abs(gauss_curvature(m, z, h) + k * k) for h in (8e-3, 4e-3, 2e-3, 1e-3)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.8 <= p <= 2.2 for p in orders), orders


def test_sigma_boundary_ratio():
    m = ConformalDiscMetric.poly_r2((1.0, 0.2))
    for r in (0.9, 0.99, 0.999):
        z = r * np.exp(0.7j)
        expected = 2 * float(m.alpha(np.array(z))) / (1 - r * r)
        assert abs(sigma_at(m, z) / expected - 1) < 1e-10
    assert sigma_at(m, 0.999) > sigma_at(m, 0.99) > 0


def test_sigma_outside_disc_raises():
    with pytest.raises(DomainError):
        sigma_at(ConformalDiscMetric.constant(1.0), 1.0)


def test_stencil_leaving_disc_raises():
    with pytest.raises(StencilError):
        gauss_curvature(ConformalDiscMetric.constant(1.0), 0.999, h=1e-3)


def test_pinching_examples():
    one = ConformalDiscMetric.constant(1.0)
    assert verify_pinching(one, CurvatureBounds(1.0, 1.0)).passed
    rep = verify_pinching(one, CurvatureBounds(0.5, 0.5))
    assert not rep.passed
    assert len(rep.violations) == len(rep.samples)


def test_pinching_with_oracle_bounds():
    coeffs = (1.0, 0.1)
    K_exact = _sympy_curvature(coeffs)
    z = disc_samples(201, 0.95)
    K = K_exact(z.real, z.imag)
    bounds = CurvatureBounds(math.sqrt(-K.min()), math.sqrt(-K.max()))
    rep = verify_pinching(ConformalDiscMetric.poly_r2(coeffs), bounds)
    assert rep.passed
    assert all(row[3] for row in rep.rows())


@given(
    a=st.floats(0.3, 2.0),
    b_frac=st.floats(0.1, 1.0),
    grow=st.floats(0.0, 1.0),
)
def test_pinching_monotone_in_bounds(a, b_frac, grow):
    m = ConformalDiscMetric.poly_r2((1.0, 0.3))
    samples = disc_samples(7, 0.9)
    tight = CurvatureBounds(a, a * b_frac)
    loose = CurvatureBounds(a + grow, a * b_frac / (1 + grow))
    assert len(verify_pinching(m, loose, samples).violations) <= len(verify_pinching(m, tight, samples).violations)


def test_from_dict_and_bounds_validation():
    m = ConformalDiscMetric.from_dict({"kind": "poly_r2", "coeffs": [1, 0.1]})
    assert m.alpha_min == pytest.approx(1.0) and m.alpha_max == pytest.approx(1.1)
    assert m.check_bounds(disc_samples())
    with pytest.raises(DomainError):
        ConformalDiscMetric.from_dict({"kind": "spline"})
    with pytest.raises(DomainError):
        CurvatureBounds(0.5, 1.0)
    with pytest.raises(DomainError):
        ConformalDiscMetric.constant(0.0)


def test_warped_hyperbolic_curvature():
    G = WarpedPolarMetric.hyperbolic(0.7)
    s = np.linspace(0.1, 4.0, 50)
    assert np.allclose(G.curvature(s), -0.49, rtol=1e-12)
    assert np.allclose(G.log_derivative(s), 1.4 / np.tanh(0.7 * s))


def test_warped_fd_fallback_matches_closed_form():
    exact = WarpedPolarMetric.perturbed_hyperbolic(1.0, 0.01)
    fd = WarpedPolarMetric(exact.sqrt_g, fd_step=1e-3)
    s = np.linspace(0.2, 4.0, 40)
    assert np.allclose(fd.G_s(s), exact.G_s(s), rtol=1e-9)
    assert np.allclose(fd.curvature(s), exact.curvature(s), atol=1e-6)


def test_perturbed_curvature_range():
    G = WarpedPolarMetric.perturbed_hyperbolic(1.0, 0.01)
    K = G.curvature(np.linspace(0.05, 5.0, 1000))
    assert K.min() > -1.21 and K.max() < -0.79
