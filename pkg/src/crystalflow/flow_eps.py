"""Crystalline curvature flow of polyrectangles in the layered medium at
scale eps.

Between events the combinatorics are frozen and every edge coordinate obeys
a smooth ODE: horizontal edges move with their calibrated velocity, moving
vertical edges with curvature plus the forcing of the cell they are in,
pinned vertical edges not at all.  Events (interface arrival, vanishing
edges, depinning, loss of calibrability) are located by bisection on the
step size and resolved by a settle loop that snaps, merges, reclassifies
vertical edges with Filippov's rule and breaks edges that stopped being
calibrable.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .calibrate import break_points, vertical_velocity_at
from .forcing import (ForcingField, InterfaceClass, interface_class, interface_index,
                      interfaces_between, interface_abscissa, snap_to_interface)
from .geometry import Polyrectangle, horizontal_edge, edges as poly_edges
from .polystate import EdgeCycle, Extinct
from .trajectory import FlowEvent, FlowTrajectory

log = logging.getLogger(__name__)

SNAP_TOL = 1e-9
VANISH_TOL = 1e-9
EVENT_TOL = 1e-13
TIME_TOL = 1e-11
NASCENT_FLOOR = -1e-7
POLICIES = ("cross", "stay")


class FlowInputError(ValueError):
    pass


class FlowError(RuntimeError):
    pass


@dataclass
class EdgeMeta:
    status: str = "moving"          # moving | pinned | held
    nascent: bool = False
    cell: Optional[tuple] = None    # (a, b, g) for a moving vertical edge
    direction: int = 0              # last sign of dx/dt for vertical edges
    branch_at: Optional[float] = None


@dataclass
class FlowState:
    F: ForcingField
    E: EdgeCycle
    meta: list
    t: float = 0.0
    policy: str = "cross"
    extinct: bool = False

    def copy(self) -> "FlowState":
        return FlowState(self.F, self.E.copy(), [replace(m) for m in self.meta], self.t,
                         self.policy, self.extinct)

    @property
    def polyrectangle(self) -> Polyrectangle:
        return self.E.polyrectangle()

    def statuses(self) -> list[str]:
        out = []
        for h, m in zip(self.E.horiz, self.meta):
            out.append("moving" if h else (m.status + ("/nascent" if m.nascent else "")))
        return out


# ------------------------------------------------------------------ dynamics

class _Window:
    """Frozen combinatorics of one inter-event window: everything the right
    hand side and the watch functions need, precomputed once."""

    def __init__(self, s: FlowState):
        F, E = s.F, s.E
        self.s = s
        n = len(E)
        self.chi = E.chi()
        self.n0 = E.n0()
        self.H = np.flatnonzero(E.horiz)
        self.V = np.flatnonzero(~E.horiz)
        self.prev = (np.arange(n) - 1) % n
        self.next = (np.arange(n) + 1) % n
        self.moving = [i for i in self.V if s.meta[i].status == "moving"]
        self.pinned = [i for i in self.V if s.meta[i].status == "pinned" and not s.meta[i].nascent]
        self.held = [i for i in self.V if s.meta[i].status == "held"]
        self.watch_len = [i for i in range(n) if not s.meta[i].nascent]
        self.inner = {}
        self.n_p = {}
        for i in self.H:
            p, q = sorted((E.coord[i - 1], E.coord[(i + 1) % n]))
            if q - p > VANISH_TOL:
                self.inner[i] = interfaces_between(F, p, q)
            self.n_p[i] = {1: -1, -1: 1}.get(int(self.chi[i]), int(self.n0[i]))
        self.base = None
        self.base = np.maximum(0.0, -self.watch(E.coord))

    # velocities -----------------------------------------------------------
    def rhs(self, c: np.ndarray) -> np.ndarray:
        s, F, E = self.s, self.s.F, self.s.E
        out = np.zeros_like(c)
        L = E.lengths(c)
        for i in self.H:
            a, b = c[self.prev[i]], c[self.next[i]]
            p, q = (a, b) if a <= b else (b, a)
            ell = q - p
            if ell > 1e-12:
                v = float(F.primitive(q) - F.primitive(p)) / ell
                if self.chi[i]:
                    v += 2.0 * self.chi[i] / ell
            else:
                v = float(F.g(0.5 * (p + q))) + (2.0 * self.chi[i] / max(ell, 1e-300) if self.chi[i] else 0.0)
            out[i] = -E.nu[i] * v
        for i in self.moving:
            g = s.meta[i].cell[2]
            v = g + (2.0 * self.chi[i] / L[i] if self.chi[i] else 0.0)
            out[i] = -E.nu[i] * v
        return out

    def one_sided(self, i: int, c: np.ndarray) -> tuple[float, float]:
        F, E = self.s.F, self.s.E
        ell = E.lengths(c)[i]
        curv = 2.0 * self.chi[i] / ell if self.chi[i] else 0.0
        cls = interface_class(F, E.coord[i])
        gl, gr = (F.alpha, F.beta) if cls is InterfaceClass.ALPHA_BETA else (F.beta, F.alpha)
        return -E.nu[i] * (curv + gl), -E.nu[i] * (curv + gr)

    # watch functions: an event is due when one of them turns negative ------
    def margins(self, c: np.ndarray) -> dict:
        F = self.s.F
        out = {}
        for i, xs in self.inner.items():
            if xs.size == 0:
                continue
            a, b = c[self.prev[i]], c[self.next[i]]
            p, q = (a, b) if a <= b else (b, a)
            ell = q - p
            Gp = F.primitive(p)
            v = float(F.primitive(q) - Gp) / ell + (2.0 * self.chi[i] / ell if self.chi[i] else 0.0)
            n = self.n_p[i] + v * (xs - p) - (F.primitive(xs) - Gp)
            out[i] = float(1.0 - np.abs(n).max())
        return out

    def watch(self, c: np.ndarray) -> np.ndarray:
        E = self.s.E
        vals = []
        for i in self.moving:
            a, b, _ = self.s.meta[i].cell
            vals += [c[i] - a, b - c[i]]
        L = E.lengths(c)
        vals += [L[i] for i in self.watch_len]
        for i in self.pinned:
            fl, fr = self.one_sided(i, c)
            vals.append(min(fl, -fr))
        for i in self.held:
            fl, fr = self.one_sided(i, c)
            vals.append(min(-fl, fr))
        vals += list(self.margins(c).values())
        w = np.array(vals, float)
        if self.base is not None:
            w = w + self.base
        return w

    def rk4(self, c: np.ndarray, h: float) -> np.ndarray:
        k1 = self.rhs(c)
        k2 = self.rhs(c + 0.5 * h * k1)
        k3 = self.rhs(c + 0.5 * h * k2)
        k4 = self.rhs(c + h * k3)
        return c + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_ode(state: FlowState, dt: float) -> FlowState:
    """Advance with one classical RK4 step, assuming no event inside."""
    out = state.copy()
    if dt == 0:
        return out
    w = _Window(state)
    out.E.coord = w.rk4(state.E.coord, dt)
    out.t = state.t + dt
    return out


# ------------------------------------------------------------------ the flow

class EpsFlow:
    def __init__(self, P: Polyrectangle, F: ForcingField, policy: str = "cross",
                 auto_snap: bool = False, dt_max: Optional[float] = None):
        if policy not in POLICIES:
            raise FlowInputError(f"unknown branch policy {policy!r}")
        if auto_snap:
            P = snap_to_C(P, F)
        self.F = F
        self.dt_max = dt_max if dt_max is not None else F.epsilon / 4
        E = EdgeCycle.from_polyrectangle(P)
        self.state = FlowState(F, E, [EdgeMeta() for _ in range(len(E))], 0.0, policy)
        self.traj = FlowTrajectory(samples=[], events=[])
        from .calibrate import is_calibrable
        for e in poly_edges(P):
            if e.axis == "h" and not is_calibrable(e, F).calibrable:
                raise FlowInputError(f"horizontal edge {e.index} is not calibrable; "
                                     "snap the datum or enable auto_snap")
        self._settle()

    # logging helpers ------------------------------------------------------
    def _event(self, kind: str, **payload) -> None:
        self.traj.events.append(FlowEvent(self.state.t, kind, payload))

    # settle loop ----------------------------------------------------------
    def _settle(self) -> None:
        s, F = self.state, self.F
        for _ in range(200):
            if s.extinct:
                return
            E = s.E
            # snap vertical edges onto nearby interfaces
            for i in np.flatnonzero(~E.horiz):
                u = interface_index(F, E.coord[i])
                if abs(u - round(u)) * F.epsilon / 2 < SNAP_TOL:
                    E.coord[i] = interface_abscissa(F, round(u))
            L = E.lengths()
            for i, m in enumerate(s.meta):
                if m.nascent:
                    if L[i] < NASCENT_FLOOR:
                        raise FlowError("a freshly created step collapsed: wrong contact sign")
                    if L[i] > VANISH_TOL:
                        m.nascent = False
            gone = [i for i in range(len(E)) if not s.meta[i].nascent and L[i] <= VANISH_TOL]
            if gone:
                i = min(gone, key=lambda k: L[k])
                self._event("Vanish", edge=i, axis="h" if E.horiz[i] else "v",
                            coord=float(E.coord[i]), length=float(L[i]))
                prefer = np.array([m.status == "pinned" for m in s.meta])
                try:
                    newE, merges, ids = E.remove(i, prefer)
                except Extinct:
                    s.extinct = True
                    self._event("Extinction")
                    return
                for rec in merges:
                    self._event("Recompose", mode=rec[0], edges=list(rec[1:]))
                meta = [s.meta[k] for k in ids]
                for m in meta:
                    m.nascent = False
                s.E, s.meta = newE, meta
                continue
            self._classify()
            if self._break_edges():
                continue
            return
        raise FlowError("settle loop did not converge")

    def _classify(self) -> None:
        s, F, E = self.state, self.F, self.state.E
        L = E.lengths()
        chi = E.chi()
        for i in np.flatnonzero(~E.horiz):
            m = s.meta[i]
            if m.nascent:
                m.status, m.cell = "pinned", None
                continue
            x = E.coord[i]
            cls = interface_class(F, x)
            old = m.status
            if cls is InterfaceClass.NONE:
                u = interface_index(F, x)
                a, b = interface_abscissa(F, math.floor(u)), interface_abscissa(F, math.ceil(u))
                m.status, m.cell = "moving", (a, b, float(F.g(x)))
                continue
            vv = vertical_velocity_at(F, x, int(chi[i]), max(L[i], 1e-300), int(E.nu[i]),
                                      s.policy, m.direction)
            if vv.status == "pinned":
                m.status, m.cell = "pinned", None
                if old == "moving":
                    self._event("Pin", edge=i, x=float(x))
                continue
            if vv.status == "unstable":
                if m.branch_at != x:
                    m.branch_at = x
                    self._event("NonUniqueBranch", edge=i, x=float(x), policy=s.policy,
                                one_sided=list(vv.one_sided))
                if s.policy == "stay":
                    m.status, m.cell = "held", None
                    continue
                d = m.direction if m.direction else -int(E.nu[i])
            else:
                d = 1 if vv.one_sided[0] > 0 or vv.one_sided[1] > 0 else -1
            k = round(interface_index(F, x))
            nb = interface_abscissa(F, k + d)
            a, b = (x, nb) if d > 0 else (nb, x)
            m.status, m.cell, m.direction = "moving", (a, b, float(F.g(0.5 * (a + b)))), d
            if old == "pinned":
                self._event("Unpin", edge=i, x=float(x))

    def _break_edges(self) -> bool:
        s, F, E = self.state, self.F, self.state.E
        w = _Window(s)
        margins = w.margins(E.coord)
        if not margins:
            return False
        rates = w.rhs(E.coord)
        n = len(E)
        for i, mg in sorted(margins.items()):
            if mg > 1e-9:
                continue
            a, b = E.coord[i - 1], E.coord[(i + 1) % n]
            ra, rb = rates[i - 1], rates[(i + 1) % n]
            (p, rp), (q, rq) = sorted(((a, ra), (b, rb)))
            chi, n0 = int(w.chi[i]), int(w.n0[i]) or None
            edge = horizontal_edge(p, q, chi, n0 if chi == 0 else None)
            pts = break_points(edge, F, (rp, rq))
            if not pts:
                continue
            self._event("CalibrabilityMarginal", edge=i, margin=mg)
            xs = [bp.x for bp in pts]
            nus = [bp.contact for bp in pts]
            newE, ins = E.split(i, xs, nus)
            meta = s.meta[:i] + [EdgeMeta()]
            for _ in xs:
                meta += [EdgeMeta(status="pinned", nascent=True), EdgeMeta()]
            meta += s.meta[i + 1:]
            s.E, s.meta = newE, meta
            self._event("Break", edge=i, splits=xs, contacts=nus)
            return True
        return False

    # integration ----------------------------------------------------------
    def _advance(self, t_stop: float) -> None:
        """Integrate to t_stop or to the first event before it."""
        s = self.state
        w = _Window(s)
        c0 = s.E.coord.copy()
        v = np.abs(w.rhs(c0))
        vmax = float(v.max()) if v.size else 0.0
        h = min(self.dt_max, t_stop - s.t)
        if vmax > 0:
            h = min(h, self.F.epsilon / (10 * vmax))
        c1 = w.rk4(c0, h)
        if np.all(w.watch(c1) >= -EVENT_TOL):
            s.E.coord = c1
            s.t = s.t + h if h < t_stop - s.t else t_stop
            return
        lo, hi = 0.0, h
        while hi - lo > TIME_TOL:
            mid = 0.5 * (lo + hi)
            if np.all(w.watch(w.rk4(c0, mid)) >= -EVENT_TOL):
                lo = mid
            else:
                hi = mid
        s.E.coord = w.rk4(c0, hi)
        s.t += hi
        self._settle()

    def run(self, T: float, sample_times: Sequence[float] = ()) -> FlowTrajectory:
        samples = sorted(float(t) for t in sample_times if 0 <= t <= T)
        k = 0
        s = self.state
        max_steps = 10_000_000
        for _ in range(max_steps):
            while k < len(samples) and samples[k] <= s.t + 1e-14:
                self.traj.record(samples[k], s.E.vertices(), s.statuses())
                k += 1
            if s.extinct or s.t >= T:
                break
            target = samples[k] if k < len(samples) else T
            self._advance(min(target, T))
        else:
            raise FlowError("step budget exhausted")
        self.traj.final_time = s.t
        self.traj.final_vertices = None if s.extinct else s.E.vertices()
        return self.traj


def run(initial: Polyrectangle, F: ForcingField, T: float, sample_times: Sequence[float] = (),
        branch_policy: str = "cross", auto_snap: bool = False,
        dt_max: Optional[float] = None) -> FlowTrajectory:
    return EpsFlow(initial, F, branch_policy, auto_snap, dt_max).run(T, sample_times)


def _flow_for(state: FlowState) -> EpsFlow:
    fl = EpsFlow.__new__(EpsFlow)
    fl.F = state.F
    fl.dt_max = state.F.epsilon / 4
    fl.state = state.copy()
    fl.traj = FlowTrajectory(samples=[], events=[])
    return fl


def locate_next_event(state: FlowState, horizon: float) -> Optional[tuple[float, FlowEvent]]:
    """First logged event after state.t and before `horizon`, or None.  The
    input state is not modified; the returned event carries the resolved
    post-event state for apply_event."""
    fl = _flow_for(state)
    s = fl.state
    while s.t < horizon and not s.extinct:
        fl._advance(horizon)
        if fl.traj.events:
            ev = fl.traj.events[0]
            ev.after = fl.state.copy()
            return ev.time, ev
    return None


def apply_event(state: FlowState, event: FlowEvent) -> FlowState:
    after = getattr(event, "after", None)
    if after is None or after.t < state.t:
        raise FlowError("event was not located from this state")
    return after.copy()


# ------------------------------------------------------------------ snapping

def snap_to_C(P: Polyrectangle, F: ForcingField) -> Polyrectangle:
    """Move every vertical edge onto the nearest interface of the class that
    makes all horizontal edges C-edges: right-facing edges onto alpha|beta
    interfaces, left-facing ones onto beta|alpha.  Ties go inward."""
    E = EdgeCycle.from_polyrectangle(P)
    for i in np.flatnonzero(~E.horiz):
        x = E.coord[i]
        cls = InterfaceClass.ALPHA_BETA if E.nu[i] > 0 else InterfaceClass.BETA_ALPHA
        lft = snap_to_interface(F, x, cls, "left")
        rgt = snap_to_interface(F, x, cls, "right")
        dl, dr = x - lft, rgt - x
        if abs(dl - dr) <= 1e-9 * F.epsilon:
            E.coord[i] = lft if E.nu[i] > 0 else rgt
        else:
            E.coord[i] = lft if dl < dr else rgt
    return Polyrectangle(E.vertices())
