import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crystalflow.geometry import (GeometryError, Polyrectangle, boundary_gap, contains,
                                  corner_convexity, edges, hausdorff_distance, normalize,
                                  vertex_field)

L_SHAPE = [(0, 2), (1, 2), (1, 1), (2, 1), (2, 0), (0, 0)]


def test_rectangle_is_clockwise_and_canonical():
    R = Polyrectangle.rectangle(4, 2)
    assert R.area == pytest.approx(8)
    assert R.bounds() == (-2, -1, 2, 1)
    assert np.all(corner_convexity(R) == 1)


def test_counterclockwise_input_is_reoriented():
    ccw = list(reversed(L_SHAPE))
    assert normalize(ccw) == Polyrectangle(L_SHAPE)


def test_collinear_and_duplicate_vertices_are_dropped():
    P = Polyrectangle([(0, 1), (0.5, 1), (1, 1), (1, 1), (1, 0), (0, 0)])
    assert len(P) == 4


@pytest.mark.parametrize("pts", [
    [(0, 0), (1, 1), (2, 0), (1, -1)],                 # not axis parallel
    [(0, 0), (2, 0), (2, 2), (1, 2), (1, -1), (0, -1)],   # self-intersecting
    [(0, 0), (1, 0)],
])
def test_invalid_polygons_rejected(pts):
    with pytest.raises(GeometryError):
        Polyrectangle(pts)


def test_edges_of_l_shape_have_expected_convexity():
    E = edges(Polyrectangle(L_SHAPE))
    horiz = [e for e in E if e.axis == "h"]
    chis = sorted(e.chi for e in horiz)
    assert chis == [0, 1, 1]
    for e in horiz:
        if e.chi == 0:
            assert e.n0 in (-1, 1)


def test_vertex_field_corners_are_wulff_corners():
    for s1, s2 in vertex_field(Polyrectangle(L_SHAPE)):
        assert abs(s1) == 1 and abs(s2) == 1


def test_hausdorff_examples():
    A, B = Polyrectangle.rectangle(2, 2), Polyrectangle.rectangle(1, 1)
    assert hausdorff_distance(A, B) == pytest.approx(0.5, abs=1e-9)
    assert hausdorff_distance(A, A.translate(0.3, 0)) == pytest.approx(0.3, abs=1e-9)
    assert hausdorff_distance(A, A) == 0


def test_containment_and_gap():
    outer, inner = Polyrectangle.rectangle(6, 6), Polyrectangle.rectangle(4, 2)
    assert contains(outer, inner)
    assert not contains(inner, outer)
    assert boundary_gap(outer, inner) == pytest.approx(1.0)


coords = st.floats(-5, 5, allow_nan=False).map(lambda v: round(v, 3))


@settings(max_examples=40, deadline=None)
@given(x0=coords, y0=coords, w=st.floats(0.1, 4), h=st.floats(0.1, 4),
       dx=coords, dy=coords)
def test_hausdorff_is_translation_invariant_and_symmetric(x0, y0, w, h, dx, dy):
    A = Polyrectangle.rectangle(w, h, (x0, y0))
    B = Polyrectangle.rectangle(h, w, (x0 + 0.2, y0))
    d = hausdorff_distance(A, B)
    assert hausdorff_distance(B, A) == pytest.approx(d, abs=1e-9)
    assert hausdorff_distance(A.translate(dx, dy), B.translate(dx, dy)) == pytest.approx(d, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(w=st.floats(0.2, 4), h=st.floats(0.2, 4), s=st.floats(0.01, 1))
def test_nested_rectangles_gap_equals_margin(w, h, s):
    inner = Polyrectangle.rectangle(w, h)
    outer = Polyrectangle.rectangle(w + 2 * s, h + 2 * s)
    assert contains(outer, inner)
    assert boundary_gap(outer, inner) == pytest.approx(s, abs=1e-9)
    assert hausdorff_distance(outer, inner) == pytest.approx(s, abs=1e-6)
