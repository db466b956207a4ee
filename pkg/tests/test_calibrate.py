import numpy as np
import pytest

from crystalflow.calibrate import (CalibrationError, boundary_conditions, break_points,
                                   candidate_profile, check_edge, horizontal_velocity,
                                   is_calibrable, thresholds, vertical_velocity_at)
from crystalflow.forcing import ForcingField, decompose, integral_g
from crystalflow.geometry import Polyrectangle, edges, horizontal_edge
from crystalflow.harness import random_edge


def test_boundary_conditions():
    assert boundary_conditions(horizontal_edge(0, 1, 1)) == (-1, 1)
    assert boundary_conditions(horizontal_edge(0, 1, -1)) == (1, -1)
    assert boundary_conditions(horizontal_edge(0, 1, 0, 1)) == (1, 1)


def test_zero_curvature_sign_comes_from_vertex_field():
    # step edge whose neighbouring vertical edges both face +x
    P = Polyrectangle([(0, 2), (1, 2), (1, 1), (2, 1), (2, 0), (0, 0)])
    e = next(e for e in edges(P) if e.axis == "h" and e.chi == 0)
    assert boundary_conditions(e) == (1, 1)


def test_symmetric_c_edge(unit_field):
    e = horizontal_edge(-2.25, 2.25, 1)
    prof = candidate_profile(e, unit_field)
    assert prof.alpha_slope == pytest.approx(4 / 3)
    assert prof.beta_slope == pytest.approx(-2 / 3)
    assert prof.values[0] == -1 and prof.values[-1] == pytest.approx(1, abs=1e-12)
    rep = is_calibrable(e, unit_field)
    assert rep.calibrable and rep.analytic and rep.criterion == "CEdge"
    assert rep.velocity == pytest.approx(1 / 3)
    assert horizontal_velocity(e, unit_field) == pytest.approx(1 / 3)


def test_long_edge_with_beta_endpoint_fails(unit_field):
    rep = check_edge(unit_field, 1, 0.6, 5.6)
    assert not rep.calibrable and not rep.analytic
    assert rep.max_abs_n > 1 and rep.failure_point is not None
    with pytest.raises(CalibrationError):
        horizontal_velocity(horizontal_edge(0.6, 5.6, 1), unit_field)


def test_zero_curvature_examples(unit_field):
    short = check_edge(unit_field, 0, 0.25, 0.65, 1)
    assert short.calibrable and short.criterion == "ZeroCurvShort"
    assert short.velocity == pytest.approx(1.0)
    long_ = check_edge(unit_field, 0, 0.25, 3.25, 1)
    assert long_.calibrable and long_.criterion == "ZeroCurvLong"
    assert long_.velocity == pytest.approx(0.0, abs=1e-14)


def test_negative_c_edge(unit_field):
    rep = check_edge(unit_field, -1, 0.25, 4.75)
    assert rep.calibrable and rep.analytic
    assert rep.velocity == pytest.approx(-1 / 3)


def test_degenerate_medium_is_linear():
    F = ForcingField.unchecked(0.7, 0.7, 1.0)
    prof = candidate_profile(horizontal_edge(0.1, 3.0, 1), F)
    assert np.allclose(prof.slopes, 2 / 2.9)


def test_one_period_zero_curvature_returns_to_n0(unit_field):
    prof = candidate_profile(horizontal_edge(-0.25, 0.75, 0, -1), unit_field)
    assert prof.values[-1] == pytest.approx(-1, abs=1e-12)


def test_thresholds(unit_field):
    th = thresholds(unit_field)
    assert th.N_bar == 1
    assert th.delta_of_N(2) == pytest.approx(0.75)
    assert th.delta_of_N(0) == pytest.approx(0.25)
    assert th.sigma_tilde(3) == pytest.approx(1 / 6)
    assert th.N_of_length(4.5) == 2
    assert th.pinning_length(1) == 2 and th.pinning_length(0) == 0 and th.pinning_length(-1) == 2
    for N in range(8):
        d = th.delta_of_N(N)
        assert 0 < d < unit_field.epsilon
        assert (d > unit_field.epsilon / 2) == (N >= th.N_bar)


def test_vertical_velocities(unit_field):
    F = unit_field
    assert vertical_velocity_at(F, 0.0, 1, 4.0, 1).velocity == pytest.approx(-0.5)
    assert vertical_velocity_at(F, 0.25, 1, 3.0, 1).status == "pinned"
    assert vertical_velocity_at(F, 0.25, 0, 1.0, 1).status == "pinned"
    assert vertical_velocity_at(F, -0.25, 0, 1.0, -1).status == "pinned"
    un = vertical_velocity_at(F, 0.75, 0, 1.0, 1)
    assert un.status == "unstable" and un.one_sided[0] < 0 < un.one_sided[1]
    assert vertical_velocity_at(F, 0.75, 0, 1.0, 1, "stay").velocity == 0


def test_break_points_at_threshold(unit_field):
    e = horizontal_edge(-3.0, 3.0, 1)
    pts = break_points(e, unit_field)
    assert [(round(b.x, 12), b.contact) for b in pts] == [(-2.25, -1), (2.25, 1)]
    # the three pieces are calibrable and translate together
    mid = check_edge(unit_field, 1, -2.25, 2.25)
    side = check_edge(unit_field, 0, 2.25, 3.0, 1)
    assert mid.calibrable and side.calibrable
    with pytest.raises(CalibrationError):
        break_points(horizontal_edge(-2.25, 2.25, 1), unit_field)


def test_break_points_with_rates_look_ahead(unit_field):
    pts = break_points(horizontal_edge(-3.0, 3.0, 1), unit_field, endpoint_rates=(0.1, -0.1))
    assert [b.contact for b in pts] == [-1, 1]
    np.testing.assert_allclose([b.x for b in pts], [-2.25, 2.25])


def test_randomized_properties(rng):
    checked = 0
    for _ in range(600):
        F, chi, n0, p, q = random_edge(rng)
        rep = check_edge(F, chi, p, q, n0)
        edge = horizontal_edge(p, q, chi, n0)
        prof = candidate_profile(edge, F)
        nq = boundary_conditions(edge)[1]
        assert prof.values[-1] == pytest.approx(nq, abs=1e-10)
        if rep.marginal:
            continue
        checked += 1
        assert rep.analytic == rep.calibrable, (F, chi, n0, p, q)
        if rep.calibrable:
            ell = q - p
            v = 2 * chi / ell + integral_g(F, p, q) / ell
            assert rep.velocity == pytest.approx(v, rel=1e-12, abs=1e-12)
            mirrored = check_edge(F, chi, -q, -p, -n0 if chi == 0 else None)
            assert mirrored.calibrable
            assert mirrored.velocity == pytest.approx(rep.velocity, rel=1e-10, abs=1e-12)
        d = decompose(F, p, q)
        inc = F.epsilon * (4 * chi + F.contrast * (d.ell_beta - d.ell_alpha)) / (2 * d.ell)
        if chi:
            assert np.sign(inc) == chi
    assert checked >= 500
