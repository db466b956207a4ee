"""Calibration of horizontal edges in the layered medium.

On a horizontal edge [p, q] the first component n of a Cahn-Hoffmann field
must solve n' + g = v with v constant, take the prescribed corner values at
p and q, and stay in [-1, 1].  The first two requirements fix n and v
uniquely (the candidate profile); the edge is calibrable iff the candidate
respects the constraint.  This module decides that twice: by closed-form
criteria on the endpoint positions, and by evaluating the profile at the
phase interfaces where its extrema live.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from .forcing import (ForcingField, InterfaceClass, IFACE_TOL, decompose,
                      interface_class, interfaces_between, snap_to_interface, x_N)
from .geometry import Edge, GeometryError
from .tautstring import edge_string

CONSTRAINT_TOL = 1e-8
MARGINAL_BAND = 1e-6
CONTACT_TOL = 1e-10


class CalibrationError(RuntimeError):
    pass


# --------------------------------------------------------------------- profile

@dataclass(frozen=True)
class CahnHoffmannProfile:
    breakpoints: np.ndarray
    values: np.ndarray
    alpha_slope: float
    beta_slope: float
    velocity: float

    def __call__(self, x):
        return np.interp(x, self.breakpoints, self.values)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def boundary_conditions(edge: Edge, vertex_field=None) -> tuple[int, int]:
    """(n(p), n(q)) for a horizontal edge.  With `vertex_field` given as the
    corner values at p and q, the zero-curvature value is read from them."""
    if edge.axis != "h":
        raise GeometryError("horizontal edges only")
    if vertex_field is None or edge.chi != 0:
        return edge.boundary_values
    (a, _), (b, _) = vertex_field
    if a != b:
        raise GeometryError("zero-curvature edge with mismatched corner values")
    return (int(a), int(a))


def _velocity(F: ForcingField, chi: int, p: float, q: float) -> float:
    ell = q - p
    return 2.0 * chi / ell + float(F.primitive(q) - F.primitive(p)) / ell


def _profile(F: ForcingField, chi: int, n_p: float, p: float, q: float) -> CahnHoffmannProfile:
    ell = q - p
    d = decompose(F, p, q)
    D = F.contrast
    sa = (4 * chi + D * (ell - d.ell_alpha + d.ell_beta)) / (2 * ell)
    sb = (4 * chi - D * (ell + d.ell_alpha - d.ell_beta)) / (2 * ell)
    v = _velocity(F, chi, p, q)
    xs = np.concatenate(([p], interfaces_between(F, p, q), [q]))
    vals = n_p + v * (xs - p) - (F.primitive(xs) - F.primitive(p))
    return CahnHoffmannProfile(xs, vals, sa, sb, v)


def candidate_profile(edge: Edge, F: ForcingField) -> CahnHoffmannProfile:
    n_p, _ = boundary_conditions(edge)
    return _profile(F, edge.chi, n_p, edge.p[0], edge.q[0])


# ------------------------------------------------------------------ thresholds

@dataclass(frozen=True)
class Thresholds:
    F: ForcingField

    @property
    def N_bar(self) -> int:
        eps, D = self.F.epsilon, self.F.contrast
        # smallest N >= 0 with 2 x_N + eps/2 > 4 / D
        N = max(0, math.floor((4.0 / D - eps / 2) / (2 * eps) - 0.25))
        while 2 * x_N(self.F, N) + eps / 2 <= 4.0 / D:
            N += 1
        while N > 0 and 2 * x_N(self.F, N - 1) + eps / 2 > 4.0 / D:
            N -= 1
        return N

    def delta_of_N(self, N: int) -> float:
        eps, D = self.F.epsilon, self.F.contrast
        xn = x_N(self.F, N)
        return xn * D * eps / (2 + (2 * xn - eps / 2) * D / 2)

    def N_of_length(self, ell: float) -> int:
        return math.floor(ell / (2 * self.F.epsilon) - 0.25 + 1e-12)

    def pinning_length(self, chi: int) -> float:
        return {1: -2.0 / self.F.alpha, 0: 0.0, -1: 2.0 / self.F.beta}[chi]

    def m_h(self, ell_tilde: float) -> tuple[float, float]:
        eps, D = self.F.epsilon, self.F.contrast
        den = D * (ell_tilde + eps / 2) + 4
        if den <= 0:
            raise CalibrationError("inner length below its admissible range")
        return eps * D / den, eps / 2 * (D * (ell_tilde + eps / 2) - 4) / den

    def sigma_tilde(self, ell_tilde: float) -> float:
        eps, D = self.F.epsilon, self.F.contrast
        return eps / 2 * (D * (ell_tilde + eps / 2) - 4) / (D * (ell_tilde - eps / 2) + 4)

    def sigma_star(self, ell_star: float) -> float:
        eps, D = self.F.epsilon, self.F.contrast
        return eps / 2 * (D * (ell_star + eps / 2) - 4) / (D * (ell_star - eps / 2) + 4)


def thresholds(F: ForcingField) -> Thresholds:
    return Thresholds(F)


# --------------------------------------------------------------------- reports

@dataclass
class CalibrabilityReport:
    calibrable: bool
    velocity: Optional[float]
    max_abs_n: float
    criterion: str
    analytic: bool
    marginal: bool = False
    failure_point: Optional[float] = None
    sigma1: Optional[float] = None
    sigma2: Optional[float] = None
    sigma_star: Optional[float] = None
    sigma_tilde: Optional[float] = None

    @property
    def agree(self) -> bool:
        return self.analytic == self.calibrable

    def to_dict(self) -> dict:
        d = asdict(self)
        d["agree"] = self.agree
        return d


class _Verdict(NamedTuple):
    ok: bool
    criterion: str
    margin: float                  # distance to the nearest decision boundary
    sigma1: Optional[float] = None
    sigma2: Optional[float] = None
    sigma_star: Optional[float] = None
    sigma_tilde: Optional[float] = None


def _mirror(F: ForcingField, p: float, q: float):
    """n -> -n swaps the roles of the phases; shifting by eps/2 puts the new
    low phase back on the lattice of the old alpha phase."""
    G = ForcingField.unchecked(-F.beta, -F.alpha, F.epsilon)
    return G, p - F.epsilon / 2, q - F.epsilon / 2


def _positive(F: ForcingField, p: float, q: float) -> _Verdict:
    """Closed-form decision for chi = +1 (n goes from -1 to +1)."""
    eps, D = F.epsilon, F.contrast
    d = decompose(F, p, q)
    excess = d.ell + d.ell_alpha - d.ell_beta - 4.0 / D
    beta_len = d.ell - float(F.alpha_measure(q) - F.alpha_measure(p))
    if excess <= 0 or beta_len <= IFACE_TOL:
        return _Verdict(True, "CurvatureDominant", abs(excess) if beta_len > IFACE_TOL else math.inf)
    cp, cq = interface_class(F, p), interface_class(F, q)
    if cp is InterfaceClass.BETA_ALPHA and cq is InterfaceClass.ALPHA_BETA:
        return _Verdict(True, "CEdge", excess, eps / 2, eps / 2)
    in_beta = lambda x, c: c is InterfaceClass.NONE and float(F.g(x)) == F.beta
    if in_beta(p, cp) or in_beta(q, cq) or cp is InterfaceClass.ALPHA_BETA \
            or cq is InterfaceClass.BETA_ALPHA:
        return _Verdict(False, "LongPositive", excess)
    s1 = eps / 2 if cp is InterfaceClass.BETA_ALPHA else \
        snap_to_interface(F, p, InterfaceClass.ALPHA_BETA, "right") - p
    s2 = eps / 2 if cq is InterfaceClass.ALPHA_BETA else \
        q - snap_to_interface(F, q, InterfaceClass.BETA_ALPHA, "left")
    ell_t = (q - eps / 2 - s2) - (p + eps / 2 + s1)
    T = Thresholds(F)
    m, h = T.m_h(ell_t)
    slack = min(s1 - (m * s2 + h), s2 - (m * s1 + h))
    ok = slack >= -1e-13
    if cp is InterfaceClass.NONE and cq is InterfaceClass.NONE:
        return _Verdict(ok, "LongPositive", min(abs(slack), excess), s1, s2,
                        sigma_tilde=T.sigma_tilde(ell_t))
    # one endpoint sits on its matching interface; the other is free
    ell_star = ell_t + eps
    return _Verdict(ok, "LongPositive", min(abs(slack), excess), s1, s2,
                    sigma_star=T.sigma_star(ell_star))


def _zero(F: ForcingField, p: float, q: float) -> _Verdict:
    """Closed-form decision for chi = 0 with n0 = +1."""
    eps = F.epsilon
    ell = q - p
    if ell < eps * (1 - 1e-12):
        peaks = [x for x in interfaces_between(F, p, q)
                 if interface_class(F, x) is InterfaceClass.ALPHA_BETA]
        return _Verdict(not peaks, "ZeroCurvShort", math.inf)
    ok = (interface_class(F, p) is InterfaceClass.ALPHA_BETA
          and interface_class(F, q) is InterfaceClass.ALPHA_BETA)
    return _Verdict(ok, "ZeroCurvLong", math.inf)


def _analytic(F: ForcingField, chi: int, n0: Optional[int], p: float, q: float) -> _Verdict:
    if chi == 1:
        return _positive(F, p, q)
    if chi == -1:
        v = _positive(*_mirror(F, p, q))
        return v._replace(criterion="LongNegative") if v.criterion == "LongPositive" else v
    if n0 == 1:
        return _zero(F, p, q)
    return _zero(*_mirror(F, p, q))


def _endpoint_gap(F: ForcingField, x: float) -> float:
    u = 2 * (x / F.epsilon - 0.25)
    return abs(u - round(u)) * F.epsilon / 2


def check_edge(F: ForcingField, chi: int, p: float, q: float,
               n0: Optional[int] = None) -> CalibrabilityReport:
    if not q > p:
        raise CalibrationError("need p < q")
    if chi == 0 and n0 not in (-1, 1):
        raise CalibrationError("zero-curvature edge needs n0 = +-1")
    n_p = {1: -1, -1: 1, 0: n0}[chi]
    prof = _profile(F, chi, n_p, p, q)
    vals = prof.values
    bad = np.flatnonzero(np.abs(vals) > 1 + CONSTRAINT_TOL)
    direct = bad.size == 0
    verdict = _analytic(F, chi, n0, p, q)
    inner = np.abs(vals[1:-1])
    overshoot = abs(1 - float(inner.max())) if inner.size else math.inf
    gaps = [_endpoint_gap(F, p), _endpoint_gap(F, q)]
    marginal = (any(IFACE_TOL < g_ < MARGINAL_BAND for g_ in gaps)
                or CONTACT_TOL < overshoot < MARGINAL_BAND
                or verdict.margin < MARGINAL_BAND)
    return CalibrabilityReport(
        calibrable=direct,
        velocity=prof.velocity if direct else None,
        max_abs_n=float(np.abs(vals).max()),
        criterion=verdict.criterion,
        analytic=verdict.ok,
        marginal=bool(marginal),
        failure_point=None if direct else float(prof.breakpoints[bad[0]]),
        sigma1=verdict.sigma1, sigma2=verdict.sigma2,
        sigma_star=verdict.sigma_star, sigma_tilde=verdict.sigma_tilde,
    )


def is_calibrable(edge: Edge, F: ForcingField) -> CalibrabilityReport:
    if edge.axis != "h":
        raise GeometryError("horizontal edges only")
    return check_edge(F, edge.chi, edge.p[0], edge.q[0], edge.n0)


# ------------------------------------------------------------------ velocities

def horizontal_velocity(edge: Edge, F: ForcingField, check: bool = True) -> float:
    """Inward normal velocity of a calibrable horizontal edge."""
    if check and not is_calibrable(edge, F).calibrable:
        raise CalibrationError("edge is not calibrable; break it first")
    return _velocity(F, edge.chi, edge.p[0], edge.q[0])


@dataclass(frozen=True)
class VerticalVelocity:
    """Inward velocity of a vertical edge.  `status` is one of moving, pinned,
    crossing (both sides push the same way) or unstable (both sides repel)."""
    status: str
    velocity: float
    interval: Optional[tuple[float, float]] = None
    one_sided: Optional[tuple[float, float]] = None   # dx/dt from the left / right phase


def vertical_velocity(edge: Edge, F: ForcingField, pin_policy: str = "cross",
                      previous: int = 0) -> VerticalVelocity:
    if edge.axis != "v":
        raise GeometryError("vertical edges only")
    return vertical_velocity_at(F, edge.p[0], edge.chi, edge.length, edge.normal[0],
                                pin_policy, previous)


def vertical_velocity_at(F: ForcingField, x: float, chi: int, ell: float, nu: int,
                         pin_policy: str = "cross", previous: int = 0) -> VerticalVelocity:
    curv = 2.0 * chi / ell if chi else 0.0
    cls = interface_class(F, x)
    if cls is InterfaceClass.NONE:
        return VerticalVelocity("moving", curv + float(F.g(x)))
    gl, gr = (F.alpha, F.beta) if cls is InterfaceClass.ALPHA_BETA else (F.beta, F.alpha)
    fl, fr = -nu * (curv + gl), -nu * (curv + gr)
    lo, hi = sorted((curv + F.alpha, curv + F.beta))
    if fl >= 0 >= fr:
        return VerticalVelocity("pinned", 0.0, (lo, hi), (fl, fr))
    if fl <= 0 and fr <= 0:
        return VerticalVelocity("crossing", curv + gl, (lo, hi), (fl, fr))
    if fl >= 0 and fr >= 0:
        return VerticalVelocity("crossing", curv + gr, (lo, hi), (fl, fr))
    # repelling interface: the motion is not unique
    if pin_policy == "stay":
        return VerticalVelocity("unstable", 0.0, (lo, hi), (fl, fr))
    side = previous if previous else nu * -1
    return VerticalVelocity("unstable", curv + (gr if side > 0 else gl), (lo, hi), (fl, fr))


# ------------------------------------------------------------------- breaking

class BreakPoint(NamedTuple):
    x: float
    contact: int          # +1: field touches n = 1, -1: touches n = -1


def break_points(edge: Edge, F: ForcingField,
                 endpoint_rates: Optional[tuple[float, float]] = None,
                 lookahead: float = 1e-6) -> list[BreakPoint]:
    """Split points of an edge at its calibrability threshold.

    Without rates the tangency points of the candidate profile are returned
    and an off-threshold edge is an error.  With the endpoint rates (dp/dt,
    dq/dt) the edge is pushed slightly past the threshold and the kinks of the
    variational field there are returned instead; this also resolves cases
    where several tangencies are present but only some of them open.
    """
    p, q = edge.p[0], edge.q[0]
    n_p, n_q = boundary_conditions(edge)
    if endpoint_rates is None:
        prof = candidate_profile(edge, F)
        inner = prof.values[1:-1]
        if inner.size == 0 or abs(1 - np.abs(inner).max()) > MARGINAL_BAND:
            raise CalibrationError("edge is not at its calibrability threshold")
        idx = np.flatnonzero(np.abs(np.abs(inner) - 1) <= MARGINAL_BAND)
        return [BreakPoint(float(prof.breakpoints[i + 1]), int(np.sign(inner[i]))) for i in idx]
    dp, dq = endpoint_rates
    rate = max(abs(dp), abs(dq))
    if rate > 0:
        tau = lookahead * F.epsilon / rate
        p, q = p + tau * dp, q + tau * dq
    ts, n = edge_string(F, p, q, n_p, n_q)
    jumps = np.diff(ts.slopes)
    idx = np.flatnonzero(np.abs(jumps) > 1e-10) + 1
    out = [BreakPoint(float(ts.x[i]), 1 if n[i] > 0 else -1) for i in idx]
    if not out:
        # kinks too faint to resolve: fall back to the worst violation, if any
        prof = _profile(F, edge.chi, n_p, p, q)
        inner = np.abs(prof.values[1:-1])
        if inner.size and inner.max() > 1 + 1e-13:
            i = int(np.argmax(inner)) + 1
            out = [BreakPoint(float(prof.breakpoints[i]), int(np.sign(prof.values[i])))]
    return out
