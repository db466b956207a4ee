"""Two-phase layered forcing g_eps(x) = g(x / eps) with g 1-periodic:
g = alpha on dist(x, Z) <= 1/4 and beta elsewhere.

Interfaces sit at x = (k/2 + 1/4) eps.  Even k (x = eps/4 mod eps) carry
beta on their right ("AlphaBeta"); odd k carry alpha on their right.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

IFACE_TOL = 1e-9


class ForcingError(ValueError):
    pass


class InterfaceClass(enum.Enum):
    ALPHA_BETA = "AlphaBeta"
    BETA_ALPHA = "BetaAlpha"
    NONE = "NotOnInterface"

    def other(self) -> "InterfaceClass":
        if self is InterfaceClass.NONE:
            return self
        return InterfaceClass.BETA_ALPHA if self is InterfaceClass.ALPHA_BETA else InterfaceClass.ALPHA_BETA


class Phase(enum.Enum):
    ALPHA = "alpha"
    BETA = "beta"


@dataclass(frozen=True)
class ForcingField:
    alpha: float
    beta: float
    epsilon: float
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ForcingError("epsilon must be positive")
        if self.strict:
            if not (self.alpha < 0 < self.beta):
                raise ForcingError("need alpha < 0 < beta")
            if not self.epsilon < 8.0 / (self.beta - self.alpha):
                raise ForcingError("need epsilon < 8 / (beta - alpha)")

    @classmethod
    def unchecked(cls, alpha: float, beta: float, epsilon: float) -> "ForcingField":
        """Bypass the medium invariants (degenerate test media such as alpha == beta)."""
        return cls(alpha, beta, epsilon, strict=False)

    @property
    def contrast(self) -> float:
        return self.beta - self.alpha

    @property
    def mean(self) -> float:
        return 0.5 * (self.alpha + self.beta)

    def g(self, x):
        """Pointwise value; interface points take alpha (closed alpha set)."""
        u = np.asarray(x, dtype=float) / self.epsilon
        dist = np.abs(u - np.rint(u))
        return np.where(dist <= 0.25, self.alpha, self.beta)

    # primitives -----------------------------------------------------------
    def _split(self, x):
        s = np.asarray(x, dtype=float) / self.epsilon + 0.25
        k = np.floor(s)
        return k, (s - k) * self.epsilon

    def primitive(self, x):
        """G(x) with G(-eps/4) = 0; exact for the piecewise-constant g."""
        k, r = self._split(x)
        h = 0.5 * self.epsilon
        return (k * self.epsilon * self.mean
                + np.where(r <= h, self.alpha * r, self.alpha * h + self.beta * (r - h)))

    def alpha_measure(self, x):
        """Measure of the alpha phase in [-eps/4, x] (signed for x < -eps/4)."""
        k, r = self._split(x)
        return k * 0.5 * self.epsilon + np.minimum(r, 0.5 * self.epsilon)


class PhaseDecomposition(NamedTuple):
    ell: float
    ell_alpha: float
    ell_beta: float
    integral: float


def phase_at(F: ForcingField, x: float) -> Phase | InterfaceClass:
    c = interface_class(F, x)
    if c is not InterfaceClass.NONE:
        return c
    return Phase.ALPHA if float(F.g(x)) == F.alpha else Phase.BETA


def interface_class(F: ForcingField, x: float, tol: float = IFACE_TOL) -> InterfaceClass:
    u = x / F.epsilon - 0.25
    k = round(2.0 * u)
    if abs(2.0 * u - k) >= 2.0 * tol:
        return InterfaceClass.NONE
    return InterfaceClass.ALPHA_BETA if k % 2 == 0 else InterfaceClass.BETA_ALPHA


def interface_abscissa(F: ForcingField, k: int) -> float:
    """k-th interface, x = (k/2 + 1/4) eps."""
    return (0.5 * k + 0.25) * F.epsilon


def interface_index(F: ForcingField, x: float) -> float:
    """Continuous index u with x = (u/2 + 1/4) eps."""
    return 2.0 * (x / F.epsilon - 0.25)


def interfaces_between(F: ForcingField, a: float, b: float, tol: float = IFACE_TOL) -> np.ndarray:
    """Interface abscissas strictly inside (a, b), excluding points within tol of the ends."""
    lo = math.floor(interface_index(F, a) + 2 * tol) + 1
    hi = math.ceil(interface_index(F, b) - 2 * tol) - 1
    if hi < lo:
        return np.empty(0)
    return (0.5 * np.arange(lo, hi + 1) + 0.25) * F.epsilon


def integral_g(F: ForcingField, a: float, b: float) -> float:
    if b < a:
        raise ForcingError("need a <= b")
    return float(F.primitive(b) - F.primitive(a))


def decompose(F: ForcingField, a: float, b: float) -> PhaseDecomposition:
    if b < a:
        raise ForcingError("need a <= b")
    eps = F.epsilon
    ell = b - a
    q = ell / eps
    n = math.floor(q)
    if abs(q - round(q)) < 1e-12 * max(1.0, abs(q)):
        n = round(q)
    meas_a = float(F.alpha_measure(b) - F.alpha_measure(a))
    rem = max(ell - n * eps, 0.0)
    la = min(max(meas_a - 0.5 * eps * n, 0.0), 0.5 * eps, rem)
    lb = min(max(rem - la, 0.0), 0.5 * eps)
    integral = F.mean * (ell - la - lb) + F.alpha * la + F.beta * lb
    return PhaseDecomposition(ell, la, lb, integral)


def x_N(F: ForcingField, N: int) -> float:
    return (N + 0.25) * F.epsilon


def snap_to_interface(F: ForcingField, x: float, which: InterfaceClass,
                      direction: str = "nearest") -> float:
    """Closest interface abscissa of class `which` to the left, right or nearest."""
    if which is InterfaceClass.NONE:
        raise ForcingError("choose AlphaBeta or BetaAlpha")
    off = 0.25 if which is InterfaceClass.ALPHA_BETA else 0.75
    u = x / F.epsilon - off
    k = round(u)
    if abs(u - k) < IFACE_TOL:
        return (k + off) * F.epsilon
    if direction == "left":
        k = math.floor(u)
    elif direction == "right":
        k = math.ceil(u)
    elif direction == "nearest":
        k = math.floor(u + 0.5)
    else:
        raise ForcingError(f"unknown direction {direction!r}")
    return (k + off) * F.epsilon
