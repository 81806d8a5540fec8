import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mincurv.catenoid_barrier import (
    CatenoidProfile,
    comparison_signs,
    fermi_barrier,
    fermi_barrier_prime,
    h_prime,
    h_second,
    height_profile,
    mean_curvature,
    ode_residual,
    ratio_inequality,
)
from mincurv.errors import DomainError, PreconditionFailError
from mincurv.metric_models import WarpedPolarMetric


def mp_height(A, k, s, dps=50):
    with mpmath.workdps(dps):
        A, k, s = mpmath.mpf(A), mpmath.mpf(k), mpmath.mpf(s)
        R = mpmath.asinh(A) / k
        return mpmath.quad(lambda r: A / mpmath.sqrt(mpmath.sinh(k * r) ** 2 - A**2), [R, s], method="tanh-sinh")


def test_neck_radius():
    p = CatenoidProfile(1.0, 1.0)
    assert p.R_neck == pytest.approx(math.log(1 + math.sqrt(2)), rel=1e-15)
    assert height_profile(p, p.R_neck) == 0.0
    with pytest.raises(DomainError):
        height_profile(p, p.R_neck - 1e-3)
    with pytest.raises(DomainError):
        CatenoidProfile(0.0, 1.0)


@pytest.mark.parametrize("A,k,s", [(1.0, 1.0, 2.0), (1.0, 1.0, 5.0), (0.3, 2.0, 1.0), (2.5, 0.7, 4.0)])
def test_height_matches_mpmath(A, k, s):
    p = CatenoidProfile(A, k)
    assert abs(height_profile(p, s) - float(mp_height(A, k, s))) < 1e-10


def test_height_near_neck_matches_mpmath():
    p = CatenoidProfile(1.0, 1.0)
    s = p.R_neck + 1e-6
    assert abs(height_profile(p, s) - float(mp_height(1.0, 1.0, s))) < 1e-10


def test_ode_residual_and_derivative_pair():
    p = CatenoidProfile(1.0, 1.0)
    s = np.linspace(p.R_neck + 0.05, 5.0, 1000)
    assert np.max(np.abs(ode_residual(p, s))) < 1e-8
    G = WarpedPolarMetric.hyperbolic(1.0)
    H = [mean_curvature(G, h_prime(p, x), h_second(p, x), x) for x in s[::50]]
    assert all(abs(m.H2) < 1e-6 and m.sign == 0 for m in H)


def test_h_prime_matches_fd_of_height():
    p = CatenoidProfile(1.0, 1.0)
    s = np.linspace(p.R_neck + 0.1, 5.0, 25)
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        fd = np.array([(height_profile(p, x + h) - height_profile(p, x - h)) / (2 * h) for x in s])
        errs.append(np.max(np.abs(fd - h_prime(p, s))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 < r < 4.5 for r in ratios), ratios


def test_h_prime_blows_up_at_neck():
    p = CatenoidProfile(1.0, 1.0)
    assert h_prime(p, p.R_neck + 1e-6) > 1e2
    with pytest.raises(DomainError):
        h_prime(p, p.R_neck)


def test_height_monotone():
    p = CatenoidProfile(0.8, 1.3)
    s = np.linspace(p.R_neck, 5.0, 40)
    h = [height_profile(p, x) for x in s]
    assert all(b > a for a, b in zip(h, h[1:]))


def test_horizontal_slice_is_minimal():
    m = mean_curvature(WarpedPolarMetric.hyperbolic(1.0), 0.0, 0.0, 1.0)
    assert m.H2 == 0.0 and m.sign == 0


def test_slower_growth_catenoid_in_faster_metric():
    k1, k2 = 1.5, 0.5
    p2 = CatenoidProfile(1.0, k2)
    G1 = WarpedPolarMetric.hyperbolic(k1)
    s = np.linspace(p2.R_neck + 0.01, p2.R_neck + 5, 50)
    assert all(mean_curvature(G1, h_prime(p2, x), h_second(p2, x), x).numerator > 0 for x in s)


@pytest.mark.parametrize(
    "G",
    [WarpedPolarMetric.hyperbolic(1.0), WarpedPolarMetric.perturbed_hyperbolic(1.0, 0.01)],
    ids=["sinh2", "perturbed"],
)
def test_comparison_and_ratio(G):
    rep = comparison_signs(G, (1.5, 0.5), 1.0, n=1000)
    assert rep.passed and not rep.boundary
    assert np.all(rep.num_k1 < 0) and np.all(rep.num_k2 > 0)
    rat = ratio_inequality(G, 1.5, 0.5, n=1000)
    assert rat.passed and rat.min_margin > 0


def test_ratio_margins_near_axis():
    G = WarpedPolarMetric.hyperbolic(1.0)
    near = ratio_inequality(G, 1.5, 0.5, samples=[0.05])
    far = ratio_inequality(G, 1.5, 0.5, samples=[1.0])
    assert near.passed
    assert near.min_margin < far.min_margin
    with pytest.raises(DomainError):
        ratio_inequality(G, 1.5, 0.5, samples=[0.01])


def test_boundary_case_flagged():
    rep = comparison_signs(WarpedPolarMetric.hyperbolic(1.5), (1.5, 0.5), 1.0, n=200)
    assert rep.boundary and not rep.k1_outward
    assert set(rep.status_k1) == {"BOUNDARY"}
    assert rep.k2_inward


def test_precondition_fail():
    G = WarpedPolarMetric.hyperbolic(1.0)
    with pytest.raises(PreconditionFailError):
        comparison_signs(G, (1.2, 1.1), 1.0)
    with pytest.raises(PreconditionFailError):
        ratio_inequality(G, 0.9, 0.5)


@given(s=st.floats(0.05, 6.0), eps=st.floats(-0.01, 0.01))
def test_ratio_implies_signs(s, eps):
    G = WarpedPolarMetric.perturbed_hyperbolic(1.0, eps)
    k1, k2, A = 1.5, 0.5, 1.0
    rat = ratio_inequality(G, k1, k2, samples=[s])
    if s > math.asinh(A) / k2 and rat.passed:
        rep = comparison_signs(G, (k1, k2), A, samples=[s])
        assert rep.passed


def test_fermi_barrier():
    assert abs(fermi_barrier(1.0, 20.5)) < 1e-8
    assert fermi_barrier(1.0, 2 * math.atanh(math.exp(-1))) == pytest.approx(-1.0, rel=1e-14)
    with pytest.raises(DomainError):
        fermi_barrier(1.0, 0.0)
    with pytest.raises(DomainError):
        fermi_barrier(1.0, 1.0, b=0.5)


@pytest.mark.parametrize("k", [0.3, 1.0, 2.0])
def test_fermi_barrier_shape(k):
    s = np.linspace(0.05, 10, 400)
    f = fermi_barrier(k, s)
    assert np.all(f < 0) and np.all(np.diff(f) > 0)
    assert np.all(np.diff(f, 2) <= 0)
    errs = []
    for h in (1e-2, 5e-3):
        x = np.linspace(0.5, 5, 20)
        fd = (fermi_barrier(k, x + h) - fermi_barrier(k, x - h)) / (2 * h)
        errs.append(np.max(np.abs(fd - fermi_barrier_prime(k, x))))
    assert 3.5 < errs[0] / errs[1] < 4.5
