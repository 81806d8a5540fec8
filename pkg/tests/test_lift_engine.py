import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mincurv.end_model import BranchDomain, EndData, branch_F, im_F
from mincurv.errors import CTooSmallError, DomainError
from mincurv.lift_engine import (
    build_gamma,
    close_polygon,
    lift,
    lift_threshold,
    polygon_escape_check,
)


def test_gamma_examples():
    g = build_gamma(1.0, 0)
    assert g(0.0) == pytest.approx(1 + 0j)
    assert g(4.0) == pytest.approx(-1 + 0j)
    g2 = build_gamma(2.0, 1)
    assert g2(0.0) == pytest.approx(2) and g2(32.0) == pytest.approx(2)
    assert g2.length == 32.0
    with pytest.raises(DomainError):
        g(9.0)


@given(t=st.floats(0.0, 16.0))
def test_gamma_on_square(t):
    w = build_gamma(2.0, 0)(t)
    assert max(abs(w.real), abs(w.imag)) == pytest.approx(2.0)


def _exact_preimage(w, k, m):
    """Root of z^(m+1) = w with argument in sector k."""
    dom = BranchDomain(k, m)
    p = m + 1
    roots = np.abs(w) ** (1 / p) * np.exp(1j * (np.angle(w) + 2 * math.pi * np.arange(p)) / p)
    inside = [z for z in roots if dom.contains(z, slack=1e-12)]
    assert inside
    return inside


@pytest.mark.parametrize("m,C", [(0, 3.0), (1, 5.0), (2, 10.0)])
def test_c0_lift_matches_analytic_preimage(m, C):
    end = EndData(m, 0.0, 1.5)
    lf = lift(end, C, step=0.05)
    worst = 0.0
    for pc in lf.pieces:
        for z, w in zip(pc.z, pc.w):
            worst = max(worst, min(abs(z - r) for r in _exact_preimage(w, pc.k, m)))
    assert worst < 1e-8
    poly = close_polygon(lf, end)
    assert poly.degenerate_closing
    assert poly.n_vertices == 4 * (m + 1)
    assert poly.reflex_count == 0
    assert poly.is_simple() and poly.signed_area() > 0
    assert poly.encloses_disc(end.R)


@pytest.mark.parametrize(
    "m,c,R,C",
    [(0, 0.5, 8.0, 40.0), (0, -0.5, 8.0, 40.0), (1, 0.3, 2.3, 20.0), (2, 1.0, 2.5, 40.0)],
)
def test_c_nonzero_lift(m, c, R, C):
    end = EndData(m, c, R)
    lf = lift(end, C, step=0.05)
    assert lf.forward_residual() < 1e-7
    dom0 = BranchDomain(0, m)
    assert abs(im_F(end, lf.end_point)) < 1e-8
    assert branch_F(end, dom0, lf.end_point).real == pytest.approx(C + 2 * math.pi * c, abs=1e-8)
    assert branch_F(end, dom0, lf.start_point) == pytest.approx(C, abs=1e-9)
    poly = close_polygon(lf, end)
    assert poly.n_vertices == 4 * (m + 1) + 2
    assert poly.reflex_count == 1
    reflex = [v for v in poly.vertices if v.angle > math.pi][0]
    assert reflex.kind == ("start" if c > 0 else "end")
    assert all(abs(v.raw_angle - v.angle) < 0.05 for v in poly.vertices)
    assert poly.is_simple() and poly.signed_area() > 0
    assert poly.encloses_disc(end.R)
    total_turning = sum(math.pi - v.angle for v in poly.vertices)
    assert total_turning == pytest.approx(2 * math.pi * (m + 1))


def test_arc_classes_and_rows():
    end = EndData(1, 0.3, 2.3)
    poly = close_polygon(lift(end, 20.0), end)
    assert "B*" in poly.arcs
    assert set(poly.arc_class) == {"A", "B", "B*"}
    rows = poly.rows()
    assert len(rows) == len(poly.points) and len(rows[0]) == 5
    assert set(poly.sector) == set(range(end.n_sectors))


def test_C_too_small():
    end = EndData(0, 0.5, 8.0)
    with pytest.raises(CTooSmallError):
        lift(end, lift_threshold(end) * 0.99)


def test_escape_check_c0():
    e0 = EndData(0, 0.0, 1.5)
    assert polygon_escape_check(e0, 3.0, [2.0, 2.5, 3.5, 5.0]) == 3.5
    e1 = EndData(1, 0.0, 1.5)
    assert polygon_escape_check(e1, 3.0, [5.0, 8.0, 9.5, 12.0]) == 9.5
    with pytest.raises(DomainError):
        polygon_escape_check(e0, 3.0, [3.0, 2.0])


def test_min_modulus_monotone_in_C():
    end = EndData(0, 1.0, 15.0)
    Cs = [30.0, 40.0, 60.0]
    mins = []
    for C in Cs:
        poly = close_polygon(lift(end, C, step=0.1), end)
        dense = np.min(np.abs(poly.points))
        mins.append(dense)
        assert poly.min_modulus() <= dense + 1e-12
    assert mins[0] < mins[1] < mins[2]
