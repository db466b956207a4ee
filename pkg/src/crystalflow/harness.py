"""Experiments: eps-sweeps against the effective flow, comparison checks on
nested pairs, phase portraits of the effective rectangle system and the
randomized calibrability corpus."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import flow_eff, flow_eps
from .calibrate import MARGINAL_BAND, check_edge
from .forcing import ForcingField, InterfaceClass, snap_to_interface
from .geometry import (Polyrectangle, boundary_gap, contains, hausdorff_distance,
                       horizontal_edge)
from .oracle import is_calibrable_oracle

THREADS_ENV = "CRYSTAL_FLOW_THREADS"


def worker_count(n_items: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n, n_items))


def pmap(fn: Callable, items: list) -> list:
    """Order-preserving map; parallel when more than one worker is allowed."""
    w = worker_count(len(items))
    if w == 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


# ------------------------------------------------------------- random shapes

def _lattice(F: ForcingField, k: int, cls: InterfaceClass) -> float:
    """k-th interface of class cls (k counts periods)."""
    return (k + (0.25 if cls is InterfaceClass.ALPHA_BETA else 0.75)) * F.epsilon


def _skyline(rng: np.random.Generator, k0: int, k1: int, levels: list, sign: int,
             F: ForcingField):
    """Piecewise-constant profile between the walls at periods k0 and k1 whose
    steps sit on the interface class their outward normal requires."""
    n_steps = int(rng.integers(0, 3))
    cuts = sorted(rng.choice(np.arange(k0 + 1, k1), size=min(n_steps, k1 - k0 - 1),
                             replace=False).tolist()) if k1 - k0 > 1 else []
    heights = [float(rng.choice(levels)) for _ in range(len(cuts) + 1)]
    xs, ys = [], []
    for c, (h0, h1) in zip(cuts, zip(heights, heights[1:])):
        if h0 == h1:
            continue
        # top profile (sign=+1): going up to the right faces left
        up = (h1 - h0) * sign > 0
        cls = InterfaceClass.BETA_ALPHA if up else InterfaceClass.ALPHA_BETA
        xs.append(_lattice(F, c, cls))
        ys.append((h0, h1))
    return heights, xs, ys


def random_c_polyrectangle(F: ForcingField, rng: np.random.Generator,
                           width_periods: tuple[int, int] = (2, 5),
                           top: tuple[float, float] = (0.5, 2.0),
                           bottom: tuple[float, float] = (-2.0, -0.5),
                           x_shift: int = 0,
                           walls: Optional[tuple[int, int]] = None) -> Polyrectangle:
    """Random bi-skyline (x-monotone top and bottom profiles) whose vertical
    edges all lie on the interface class matching their normal, so every
    horizontal edge is a C-edge."""
    if walls is None:
        w = int(rng.integers(width_periods[0], width_periods[1] + 1))
        k0 = x_shift - w // 2
        k1 = k0 + w
    else:
        k0, k1 = walls
    xl, xr = _lattice(F, k0, InterfaceClass.BETA_ALPHA), _lattice(F, k1, InterfaceClass.ALPHA_BETA)
    tlev = np.round(np.linspace(*top, 4), 6).tolist()
    blev = np.round(np.linspace(*bottom, 4), 6).tolist()
    th, txs, tys = _skyline(rng, k0, k1, tlev, +1, F)
    bh, bxs, bys = _skyline(rng, k0, k1, blev, -1, F)
    pts = [(xl, th[0])]
    for x, (h0, h1) in zip(txs, tys):
        pts += [(x, h0), (x, h1)]
    pts += [(xr, th[-1]), (xr, bh[-1])]
    for x, (h0, h1) in reversed(list(zip(bxs, bys))):
        pts += [(x, h1), (x, h0)]
    pts.append((xl, bh[0]))
    return Polyrectangle(pts)


def random_nested_pair(F: ForcingField, rng: np.random.Generator) -> tuple[Polyrectangle, Polyrectangle]:
    """Inner and outer C-polyrectangles with the inner one strictly inside."""
    inner = random_c_polyrectangle(F, rng, (1, 3), (0.4, 1.2), (-1.2, -0.4))
    a, b, c, d = inner.bounds()
    margin = float(rng.uniform(0.2, 0.8))
    ka = math.floor(a / F.epsilon) - int(rng.integers(1, 3))
    kb = math.ceil(c / F.epsilon) + int(rng.integers(0, 2))
    outer = random_c_polyrectangle(F, rng, top=(d + margin, d + margin + 1.0),
                                   bottom=(b - margin - 1.0, b - margin), walls=(ka, kb))
    return inner, outer


# ------------------------------------------------------------- experiments

@dataclass
class ConvergeItem:
    alpha: float
    beta: float
    epsilon: float
    initial: list
    T: float
    times: list


def _converge_one(item: ConvergeItem) -> dict:
    F = ForcingField(item.alpha, item.beta, item.epsilon)
    P = Polyrectangle(item.initial)
    law = flow_eff.EffectiveLaw(item.alpha, item.beta)
    eps_traj = flow_eps.run(P, F, item.T, item.times, auto_snap=True)
    eff_traj = flow_eff.poly_flow(law, P, item.T, item.times)
    eff = {round(s.t, 12): s.polyrectangle for s in eff_traj.samples}
    errs = []
    for s in eps_traj.samples:
        Q = eff.get(round(s.t, 12))
        if Q is None:
            break
        errs.append((s.t, hausdorff_distance(s.polyrectangle, Q)))
    worst = max(errs, key=lambda e: e[1]) if errs else (0.0, 0.0)
    return {"epsilon": item.epsilon, "sup_error": worst[1], "argmax_t": worst[0],
            "errors": errs, "events": len(eps_traj.events)}


def extinction_time(law: flow_eff.EffectiveLaw, P: Polyrectangle, horizon: float = 100.0) -> float:
    tr = flow_eff.poly_flow(law, P, horizon, [])
    return tr.final_time if tr.extinct else math.inf


def converge_experiment(alpha: float, beta: float, eps_list: Iterable[float], initial: Polyrectangle,
                        T: Optional[float] = None, fraction: float = 0.9, samples: int = 200,
                        bound: float = 3.0) -> dict:
    """sup_t d_H between the eps-flow (from the snapped datum) and the
    effective flow, for each eps.  Without T the horizon is `fraction` of
    the effective extinction time."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly decreasing")
    law = flow_eff.EffectiveLaw(alpha, beta)
    t_ext = extinction_time(law, initial)
    if T is None:
        if not math.isfinite(t_ext):
            raise ValueError("no extinction: give T explicitly")
        T = fraction * t_ext
    times = np.linspace(0.0, T, samples).tolist()
    items = [ConvergeItem(alpha, beta, e, initial.vertices.tolist(), T, times) for e in eps_list]
    rows = pmap(_converge_one, items)
    errs = np.array([r["sup_error"] for r in rows])
    eps = np.array(eps_list)
    order = float(np.polyfit(np.log(eps), np.log(errs), 1)[0]) if len(eps) > 1 and np.all(errs > 0) else float("nan")
    monotone = bool(np.all(np.diff(errs) <= 0))
    within = bool(np.all(errs <= bound * eps))
    return {"T": T, "extinction_time": t_ext, "eps": eps_list, "sup_error": errs.tolist(),
            "ratio": (errs / eps).tolist(), "order": order, "monotone": monotone,
            "within_bound": within, "bound": bound, "passed": monotone and within, "rows": rows}


@dataclass
class CompareItem:
    alpha: float
    beta: float
    epsilon: float
    inner: list
    outer: list
    T: float
    times: list


def _compare_one(item: CompareItem) -> dict:
    F = ForcingField(item.alpha, item.beta, item.epsilon)
    E = flow_eps.run(Polyrectangle(item.inner), F, item.T, item.times)
    G = flow_eps.run(Polyrectangle(item.outer), F, item.T, item.times)
    violations = []
    gaps = []
    outer_at = {s.t: s.polyrectangle for s in G.samples}
    for s in E.samples:
        O = outer_at.get(s.t)
        if O is None:
            violations.append({"t": s.t, "kind": "outer extinct before inner"})
            continue
        I = s.polyrectangle
        if not contains(O, I, tol=1e-7):
            violations.append({"t": s.t, "kind": "containment"})
        gaps.append((s.t, boundary_gap(O, I)))
    tol = 1e-7
    if gaps:
        g0 = gaps[0][1]
        for t, g in gaps:
            if g < g0 - tol:
                violations.append({"t": t, "kind": "gap below initial", "gap": g, "gap0": g0})
        g = np.array([x[1] for x in gaps])
        # gap(t1) >= gap(t2) - eps for t1 >= t2: the running maximum is the binding case
        run_max = np.maximum.accumulate(g)
        for (t, gi), m in zip(gaps, run_max):
            if gi < m - item.epsilon - tol:
                violations.append({"t": t, "kind": "gap dropped by more than eps"})
    return {"violations": violations, "gaps": gaps, "inner_extinct": E.extinct,
            "non_unique": E.count("NonUniqueBranch") + G.count("NonUniqueBranch")}


def compare_experiment(alpha: float, beta: float, epsilon: float, n_pairs: int = 10, seed: int = 0,
                       T: float = 1.0, samples: int = 41,
                       pairs: Optional[list] = None) -> dict:
    F = ForcingField(alpha, beta, epsilon)
    rng = np.random.default_rng(seed)
    if pairs is None:
        pairs = [random_nested_pair(F, rng) for _ in range(n_pairs)]
    times = np.linspace(0.0, T, samples).tolist()
    items = [CompareItem(alpha, beta, epsilon, a.vertices.tolist(), b.vertices.tolist(), T, times)
             for a, b in pairs]
    rows = pmap(_compare_one, items)
    n_bad = sum(bool(r["violations"]) for r in rows)
    return {"pairs": len(rows), "failed_pairs": n_bad, "passed": n_bad == 0,
            "violations": [dict(v, pair=i) for i, r in enumerate(rows) for v in r["violations"]],
            "rows": rows}


def classify_rectangle(law: flow_eff.EffectiveLaw, l10: float, l20: float, T: float,
                       tol: float = 1e-9) -> tuple[str, flow_eff.RectangleFlow]:
    """extinction, equilibrium, pinned-expansion, or bounded for the rest."""
    d1, d2 = flow_eff.rectangle_rhs(law, l10, l20)
    rf = flow_eff.rectangle_flow(law, l10, l20, T)
    if abs(d1) < tol and abs(d2) < tol:
        return "equilibrium", rf
    if rf.extinction_time is not None and rf.extinction_time <= T:
        return "extinction", rf
    l1, l2 = rf.at(rf.t[-1])
    if abs(l1[0] - l10) < 1e-9 and l2[0] > l20:
        return "pinned-expansion", rf
    return "bounded", rf


def portrait_experiment(alpha: float, beta: float, l1_grid: Iterable[float], l2_grid: Iterable[float],
                        T: float = 20.0, samples: int = 51) -> tuple[list, list]:
    """Classification table and long-format trajectory rows for a grid of
    initial rectangles."""
    law = flow_eff.EffectiveLaw(alpha, beta)
    table, traj = [], []
    ts = np.linspace(0.0, T, samples)
    for i, a in enumerate(l1_grid):
        for j, b in enumerate(l2_grid):
            cls, rf = classify_rectangle(law, float(a), float(b), T)
            table.append({"l10": float(a), "l20": float(b), "class": cls,
                          "extinction_time": rf.extinction_time})
            l1, l2 = rf.at(ts)
            for t, x, y in zip(ts, l1, l2):
                if np.isfinite(x):
                    traj.append({"run": len(table) - 1, "t": float(t), "l1": float(x), "l2": float(y)})
    return table, traj


# ------------------------------------------------------------- corpus

def random_edge(rng: np.random.Generator):
    """Random medium and horizontal edge; endpoints land on interfaces half
    of the time so the structured cases are exercised."""
    alpha = -float(rng.uniform(0.2, 3.0))
    beta = float(rng.uniform(0.2, 3.0))
    eps = float(rng.uniform(0.05, 0.95)) * 8.0 / (beta - alpha)
    F = ForcingField(alpha, beta, eps)
    chi = int(rng.choice([-1, 0, 1]))
    n0 = int(rng.choice([-1, 1])) if chi == 0 else None
    p = float(rng.uniform(-3, 3)) * eps
    ell = float(rng.uniform(0.05, 8.0)) * eps
    q = p + ell
    if rng.random() < 0.5:
        p = snap_to_interface(F, p, rng.choice([InterfaceClass.ALPHA_BETA, InterfaceClass.BETA_ALPHA]))
    if rng.random() < 0.5:
        q = snap_to_interface(F, q, rng.choice([InterfaceClass.ALPHA_BETA, InterfaceClass.BETA_ALPHA]))
    if q <= p + 1e-3 * eps:
        q = p + ell
    return F, chi, n0, p, q


def _corpus_one(args) -> dict:
    seed, M = args
    rng = np.random.default_rng(seed)
    F, chi, n0, p, q = random_edge(rng)
    rep = check_edge(F, chi, p, q, n0)
    edge = horizontal_edge(p, q, chi, n0)
    orc = is_calibrable_oracle(edge, F, M)
    return {"seed": seed, "alpha": F.alpha, "beta": F.beta, "epsilon": F.epsilon, "chi": chi,
            "n0": n0, "p": p, "q": q, "analytic": bool(rep.analytic), "direct": bool(rep.calibrable),
            "oracle": bool(orc), "marginal": bool(rep.marginal), "criterion": rep.criterion}


def oracle_corpus(n: int = 500, seed: int = 0, M: int = 400) -> dict:
    base = np.random.SeedSequence(seed).generate_state(n)
    rows = pmap(_corpus_one, [(int(s), M) for s in base])
    scored = [r for r in rows if not r["marginal"]]
    bad = [r for r in scored if not (r["analytic"] == r["oracle"] == r["direct"])]
    return {"edges": n, "scored": len(scored), "marginal_excluded": n - len(scored),
            "disagreements": len(bad), "agreement": 1 - len(bad) / max(1, len(scored)),
            "calibrable_fraction": sum(r["analytic"] for r in scored) / max(1, len(scored)),
            "band": MARGINAL_BAND, "M": M, "failures": bad, "passed": not bad}
