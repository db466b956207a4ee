"""Homogenised flows: the limit laws obtained as the period of the medium
goes to zero.  Vertical edges move with a truncated harmonic mean of
curvature plus forcing; horizontal edges see only the average forcing."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp

from .geometry import Polyrectangle
from .polystate import EdgeCycle, Extinct
from .trajectory import FlowEvent, FlowTrajectory

RTOL, ATOL = 1e-12, 1e-13
VANISH = 1e-7


@dataclass(frozen=True)
class EffectiveLaw:
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha < 0 < self.beta:
            raise ValueError("need alpha < 0 < beta")

    @property
    def mean(self) -> float:
        return 0.5 * (self.alpha + self.beta)

    @property
    def pinning_length(self) -> float:
        return -2.0 / self.alpha


def H_g(law: EffectiveLaw, ell: float) -> float:
    """Homogenised speed of a convex vertical edge of length ell."""
    if not ell > 0:
        raise ValueError("length must be positive")
    a, b = law.alpha, law.beta
    if ell >= -2.0 / a:
        return 0.0
    return (2 + a * ell) * (2 + b * ell) / (ell * (2 + (a + b) * ell / 2))


def harmonic_mean_numeric(law: EffectiveLaw, ell: float) -> float:
    """1 / integral over one period of ds / (2/ell + g(s)), by quadrature."""
    total = 0.0
    for a, b, g in ((0.0, 0.25, law.alpha), (0.25, 0.75, law.beta), (0.75, 1.0, law.alpha)):
        part, _ = quad(lambda s, g=g: 1.0 / (2.0 / ell + g), a, b, epsabs=1e-13, epsrel=1e-12)
        total += part
    return 1.0 / total


def vertical_speed(law: EffectiveLaw, chi: int, ell: float) -> float:
    """Inward speed of a vertical edge under the homogenised law."""
    if chi == 1 and ell < -2.0 / law.alpha:
        a, b = law.alpha + 2 / ell, law.beta + 2 / ell
        return 2 * a * b / (a + b)
    if chi == -1 and ell < 2.0 / law.beta:
        a, b = law.alpha - 2 / ell, law.beta - 2 / ell
        return 2 * a * b / (a + b)
    return 0.0


def horizontal_speed(law: EffectiveLaw, chi: int, ell: float) -> float:
    return 2.0 * chi / ell + law.mean if chi else law.mean


# ------------------------------------------------------------------ rectangles

@dataclass
class RectangleFlow:
    t: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    extinction_time: Optional[float]
    segments: list = field(default_factory=list, repr=False)

    def at(self, t) -> tuple[np.ndarray, np.ndarray]:
        t = np.atleast_1d(np.asarray(t, float))
        out = np.full((2, len(t)), np.nan)
        for (a, b, sol) in self.segments:
            m = (t >= a) & (t <= b)
            if m.any():
                out[:, m] = sol(t[m])
        return out[0], out[1]


def rectangle_rhs(law: EffectiveLaw, l1: float, l2: float) -> tuple[float, float]:
    return -2.0 * H_g(law, l2), -4.0 / l1 - 2.0 * law.mean


def rectangle_flow(law: EffectiveLaw, l10: float, l20: float, T: float,
                   min_length: float = 1e-6, max_step: float = np.inf) -> RectangleFlow:
    if min(l10, l20) <= 0:
        raise ValueError("lengths must be positive")
    thr = -2.0 / law.alpha
    y = np.array([l10, l20], float)
    t0 = 0.0
    ts, ys, segs = [0.0], [y.copy()], []
    t_ext = None
    while t0 < T:
        def rhs(_, z):
            return rectangle_rhs(law, max(z[0], 1e-300), max(z[1], 1e-300))

        def regime(_, z):
            return z[1] - thr
        regime.terminal = True

        def vanish(_, z):
            return min(z[0], z[1]) - min_length
        vanish.terminal = True
        vanish.direction = -1
        sol = solve_ivp(rhs, (t0, T), y, method="DOP853", rtol=RTOL, atol=ATOL,
                        events=[regime, vanish], dense_output=True, max_step=max_step)
        segs.append((t0, sol.t[-1], sol.sol))
        ts.extend(sol.t[1:])
        ys.extend(sol.y.T[1:])
        y, t0 = sol.y[:, -1].copy(), float(sol.t[-1])
        if sol.t_events[1].size:
            t_ext = t0
            break
        if sol.status == 1:
            # regime change: snap onto the threshold and continue past it
            y[1] = thr
            d = rectangle_rhs(law, y[0], y[1])[1]
            if d == 0:
                # resting on the threshold: stationary from here on
                yc = y.copy()
                segs.append((t0, T, lambda t, yc=yc: np.multiply.outer(yc, np.ones_like(t))))
                ts.append(T)
                ys.append(yc)
                break
            # step a hair across so the event does not refire at once
            fine = solve_ivp(rhs, (t0, min(T, t0 + 1e-12)), y, method="DOP853", rtol=RTOL, atol=ATOL)
            y, t0 = fine.y[:, -1].copy(), float(fine.t[-1])
            continue
        break
    return RectangleFlow(np.array(ts), np.array(ys)[:, 0], np.array(ys)[:, 1], t_ext, segs)


# -------------------------------------------------------------- polyrectangles

def poly_velocities(law: EffectiveLaw, E: EdgeCycle, coord: np.ndarray) -> np.ndarray:
    L = np.maximum(E.lengths(coord), 1e-300)
    chi = E.chi()
    v = np.empty(len(E))
    for i in range(len(E)):
        v[i] = horizontal_speed(law, chi[i], L[i]) if E.horiz[i] else vertical_speed(law, chi[i], L[i])
    return -E.nu * v


def poly_flow(law: EffectiveLaw, P: Polyrectangle, T: float,
              sample_times: Optional[Sequence[float]] = None) -> FlowTrajectory:
    E = EdgeCycle.from_polyrectangle(P)
    samples = np.asarray(sample_times if sample_times is not None else [0.0, T], float)
    traj = FlowTrajectory(samples=[], events=[])
    thr = {1: -2.0 / law.alpha, -1: 2.0 / law.beta}
    t0 = 0.0
    si = 0
    while True:
        while si < len(samples) and samples[si] <= t0 + 1e-15:
            traj.record(samples[si], E.vertices(), ["moving"] * len(E))
            si += 1
        if t0 >= T:
            break
        chi = E.chi()
        vert = np.flatnonzero(~E.horiz & (chi != 0))

        def rhs(_, c):
            return poly_velocities(law, E, c)

        def vanish(_, c):
            return float(np.min(E.lengths(c))) - VANISH
        vanish.terminal = True
        vanish.direction = -1
        evs = [vanish]
        for i in vert:
            f = (lambda i: lambda _, c: E.lengths(c)[i] - thr[int(chi[i])])(i)
            f.terminal = True
            evs.append(f)
        t_end = min(T, samples[si]) if si < len(samples) else T
        sol = solve_ivp(rhs, (t0, t_end), E.coord, method="DOP853", rtol=RTOL, atol=ATOL,
                        events=evs)
        E.coord = sol.y[:, -1].copy()
        t0 = float(sol.t[-1])
        if sol.status == 1:
            hit = [k for k, te in enumerate(sol.t_events) if te.size]
            if hit and hit[0] == 0:
                L = E.lengths()
                i = int(np.argmin(L))
                traj.events.append(FlowEvent(t0, "Vanish", {"edge": i}))
                try:
                    E, merges, _ = E.remove(i)
                except Extinct:
                    traj.events.append(FlowEvent(t0, "Extinction", {}))
                    break
                for m in merges:
                    traj.events.append(FlowEvent(t0, "Recompose", {"edges": list(m[1:]), "mode": m[0]}))
            else:
                # threshold crossing: nudge past it so the event does not refire
                sol2 = solve_ivp(rhs, (t0, min(T, t0 + 1e-12)), E.coord, method="DOP853",
                                 rtol=RTOL, atol=ATOL)
                E.coord = sol2.y[:, -1].copy()
                t0 = float(sol2.t[-1])
                traj.events.append(FlowEvent(t0, "Regime", {}))
    traj.final_time = t0
    return traj


# -------------------------------------------------------------- convex bodies

@dataclass
class ConvexFront:
    t: float
    top: float
    bottom: float
    left: float
    right: float
    facets: dict                      # name -> (length, (start, end))
    outline: np.ndarray

    @property
    def facet_lengths(self) -> dict:
        return {k: v[0] for k, v in self.facets.items()}


def circle(radius: float, n: int = 2048, center=(0.0, 0.0)) -> np.ndarray:
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return np.stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], 1)


def _hull_arcs(pts: np.ndarray):
    from scipy.spatial import ConvexHull
    hull = ConvexHull(pts)
    if len(hull.vertices) < len(np.unique(pts, axis=0)) - 1e-9 * len(pts):
        inside = len(np.unique(pts, axis=0)) - len(hull.vertices)
        # collinear points are dropped by the hull; anything else is a dent
        area = hull.volume
        x, y = pts[:, 0], pts[:, 1]
        poly_area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
        if inside and abs(area - poly_area) > 1e-9 * area:
            raise ValueError("boundary is not convex")
    v = pts[hull.vertices]
    xmin, xmax = v[:, 0].min(), v[:, 0].max()
    i0 = int(np.argmin(v[:, 0]))
    v = np.roll(v, -i0, axis=0)          # hull vertices counterclockwise from the leftmost
    j = int(np.argmax(v[:, 0]))
    lower = v[: j + 1]
    upper = np.vstack([v[j:], v[:1]])[::-1]
    # vertical extreme facets of the input show up as repeated x; keep outer values
    def arc(a, pick):
        xs, idx = np.unique(a[:, 0], return_inverse=True)
        ys = np.array([pick(a[idx == k, 1]) for k in range(len(xs))])
        return xs, ys
    return arc(upper, np.max), arc(lower, np.min), (xmin, xmax)


def _super_interval(xs, ys, level):
    """Interval where the concave piecewise-linear function is >= level."""
    above = ys >= level
    if not above.any():
        k = int(np.argmax(ys))
        return xs[k], xs[k]
    i, j = np.flatnonzero(above)[[0, -1]]
    a = xs[i] if i == 0 else xs[i - 1] + (level - ys[i - 1]) * (xs[i] - xs[i - 1]) / (ys[i] - ys[i - 1])
    b = xs[j] if j == len(xs) - 1 else xs[j] + (level - ys[j]) * (xs[j + 1] - xs[j]) / (ys[j + 1] - ys[j])
    return a, b


class ConvexFlow:
    """Effective evolution of a convex body.

    Non-flat arcs have zero crystalline curvature and translate vertically
    with inward speed equal to the mean forcing.  Four facets open at the
    extreme points: horizontal ones move like horizontal edges, vertical ones
    with the homogenised speed.  A facet ends where its line meets the
    translated arc.
    """

    def __init__(self, law: EffectiveLaw, boundary: np.ndarray, seed_depth: float = 1e-9):
        self.law = law
        (self.ux, self.uy), (self.dx, self.dy), (self.xmin, self.xmax) = _hull_arcs(np.asarray(boundary, float))
        self.seed_depth = seed_depth

    def upper(self, x, t):
        return np.interp(x, self.ux, self.uy) - self.law.mean * t

    def lower(self, x, t):
        return np.interp(x, self.dx, self.dy) + self.law.mean * t

    def _facets(self, t, y):
        top, bot, left, right = y
        s = self.law.mean * t
        a, b = _super_interval(self.ux, self.uy - s, top)
        c, d = _super_interval(self.dx, -(self.dy + s), -bot)
        tl = (max(a, left), min(b, right))
        bl = (max(c, left), min(d, right))
        def vspan(x):
            return (max(float(self.lower(x, t)), bot), min(float(self.upper(x, t)), top))
        lv, rv = vspan(left), vspan(right)
        return {"top": (max(tl[1] - tl[0], 0.0), tl), "bottom": (max(bl[1] - bl[0], 0.0), bl),
                "left": (max(lv[1] - lv[0], 0.0), lv), "right": (max(rv[1] - rv[0], 0.0), rv)}

    def rhs(self, t, y):
        f = self._facets(t, y)
        law = self.law
        tiny = 1e-300
        return [-horizontal_speed(law, 1, max(f["top"][0], tiny)),
                horizontal_speed(law, 1, max(f["bottom"][0], tiny)),
                vertical_speed(law, 1, max(f["left"][0], tiny)),
                -vertical_speed(law, 1, max(f["right"][0], tiny))]

    def initial_state(self) -> np.ndarray:
        s = self.seed_depth
        return np.array([self.uy.max() - s, self.dy.min() + s, self.xmin + s, self.xmax - s])

    def front(self, t, y, n: int = 512) -> ConvexFront:
        top, bot, left, right = y
        xs = np.linspace(left, right, n)
        up = np.minimum(self.upper(xs, t), top)
        lo = np.maximum(self.lower(xs, t), bot)
        outline = np.vstack([np.stack([xs, up], 1), np.stack([xs[::-1], lo[::-1]], 1)])
        return ConvexFront(float(t), float(top), float(bot), float(left), float(right),
                           self._facets(t, y), outline)

    def run(self, T: float, sample_times: Sequence[float], min_size: float = 1e-6):
        def gone(t, y):
            return min(y[0] - y[1], y[3] - y[2]) - min_size
        gone.terminal = True
        sol = solve_ivp(self.rhs, (0.0, T), self.initial_state(), method="DOP853",
                        rtol=1e-10, atol=1e-12, dense_output=True, events=gone)
        fronts = [self.front(t, sol.sol(t)) for t in sample_times if t <= sol.t[-1]]
        return fronts, sol


def convex_flow(law: EffectiveLaw, boundary: np.ndarray, T: float,
                sample_times: Sequence[float]) -> list[ConvexFront]:
    return ConvexFlow(law, boundary).run(T, sample_times)[0]
