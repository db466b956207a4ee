import pytest

from crystalflow import harness
from crystalflow.calibrate import is_calibrable
from crystalflow.forcing import ForcingField
from crystalflow.geometry import Polyrectangle, contains, edges


def test_random_shapes_are_c_polyrectangles(rng):
    F = ForcingField(-1, 1, 0.5)
    for _ in range(20):
        P = harness.random_c_polyrectangle(F, rng)
        assert all(is_calibrable(e, F).calibrable for e in edges(P) if e.axis == "h")


def test_random_pairs_are_nested(rng):
    F = ForcingField(-1, 1, 0.5)
    for _ in range(10):
        a, b = harness.random_nested_pair(F, rng)
        assert contains(b, a)


def test_worker_count_respects_env(monkeypatch):
    monkeypatch.setenv(harness.THREADS_ENV, "1")
    assert harness.worker_count(10) == 1
    monkeypatch.setenv(harness.THREADS_ENV, "3")
    assert harness.worker_count(2) == 2


def test_compare_nested_rectangles():
    rep = harness.compare_experiment(-1, 1, 1.0, T=2.0, pairs=[
        (Polyrectangle.rectangle(0.5, 1.5), Polyrectangle.rectangle(4.5, 3.5))])
    assert rep["passed"]


def test_compare_identical_sets_keeps_zero_gap():
    R = Polyrectangle.rectangle(4.5, 3.5)
    rep = harness.compare_experiment(-1, 1, 1.0, T=1.0, pairs=[(R, R)])
    assert rep["passed"]
    assert max(g for _, g in rep["rows"][0]["gaps"]) < 1e-12


def test_converge_rejects_unsorted_eps():
    with pytest.raises(ValueError):
        harness.converge_experiment(-1, 1, [0.1, 0.2], Polyrectangle.rectangle(1.5, 1.5))


def test_portrait_regimes():
    table, traj = harness.portrait_experiment(-2, 1, [3.0, 4.0, 5.0], [0.5, 1.0, 2.0, 5.0], T=30.0)
    cls = {(r["l10"], r["l20"]): r["class"] for r in table}
    for l2 in (1.0, 2.0, 5.0):
        assert cls[(4.0, l2)] == "equilibrium"
        assert cls[(5.0, l2)] == "pinned-expansion"
    assert cls[(3.0, 0.5)] == "extinction"
    assert traj and {"run", "t", "l1", "l2"} <= set(traj[0])
    table, _ = harness.portrait_experiment(-1, 1, [1, 3, 5], [0.5, 1.5, 3], T=50.0)
    assert all(r["class"] == "extinction" for r in table)
    table, _ = harness.portrait_experiment(-1, 2, [1, 3, 5], [0.5, 1.5, 3], T=50.0)
    assert all(r["class"] == "extinction" for r in table)


def test_corpus_small():
    rep = harness.oracle_corpus(n=40, seed=3)
    assert rep["passed"] and rep["scored"] > 20
