import numpy as np
import pytest

from crystalflow import flow_eff
from crystalflow.flow_eff import EffectiveLaw, H_g, harmonic_mean_numeric
from crystalflow.geometry import Polyrectangle, hausdorff_distance

LAW = EffectiveLaw(-1.0, 1.0)


def test_harmonic_law_values():
    assert H_g(LAW, 1.0) == pytest.approx(1.5)
    assert H_g(LAW, 2.0) == 0 and H_g(LAW, 4.0) == 0
    with pytest.raises(ValueError):
        H_g(LAW, 0.0)
    for ell in np.geomspace(0.01, 1.99, 25):
        assert H_g(LAW, ell) == pytest.approx(harmonic_mean_numeric(LAW, ell), abs=1e-10)


def test_speeds():
    assert flow_eff.vertical_speed(LAW, 1, 1.0) == pytest.approx(1.5)
    assert flow_eff.vertical_speed(LAW, -1, 1.0) == pytest.approx(-1.5)
    assert flow_eff.vertical_speed(LAW, 0, 1.0) == 0
    assert flow_eff.horizontal_speed(LAW, 1, 2.0) == pytest.approx(1.0)


def test_equilibrium_rhs():
    law = EffectiveLaw(-2.0, 1.0)
    assert flow_eff.rectangle_rhs(law, 4.0, 3.0) == pytest.approx((0.0, 0.0))


def test_rectangle_extinction_and_pinning():
    rf = flow_eff.rectangle_flow(LAW, 1.5, 1.5, 5.0)
    assert rf.extinction_time == pytest.approx(0.32478, abs=1e-5)
    rf = flow_eff.rectangle_flow(LAW, 3.0, 3.0, 0.5)
    l1, l2 = rf.at(np.linspace(0, 0.5, 11))
    assert np.all(l1 == 3.0) and np.all(l2[1:] < 3.0)


def test_poly_flow_matches_rectangle_flow():
    ts = np.linspace(0, 0.3, 7)
    tr = flow_eff.poly_flow(LAW, Polyrectangle.rectangle(1.5, 1.5), 0.3, ts)
    rf = flow_eff.rectangle_flow(LAW, 1.5, 1.5, 0.3)
    for s in tr.samples:
        l1, l2 = (float(z[0]) for z in rf.at(s.t))
        assert hausdorff_distance(s.polyrectangle, Polyrectangle.rectangle(l1, l2)) < 1e-9


def test_poly_flow_l_shape_goes_extinct():
    P = Polyrectangle([(0, 2), (1, 2), (1, 1), (2, 1), (2, 0), (0, 0)])
    tr = flow_eff.poly_flow(LAW, P, 10.0, [0.0])
    assert tr.extinct and "Vanish" in tr.kinds()


def test_convex_flow_generates_facets():
    fronts = flow_eff.convex_flow(LAW, flow_eff.circle(2.0), 0.5, [0.0, 1e-4, 0.1, 0.5])
    L = [f.facet_lengths for f in fronts]
    assert all(v < 1e-3 for v in L[0].values())
    assert all(v > 0.05 for v in L[1].values())
    assert L[3]["top"] > L[2]["top"] > L[1]["top"]
