"""Brute-force references: a grid discretisation of the variational field
selection on an edge, and the constant-forcing rectangle system with its
conserved quantity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .forcing import ForcingField
from .geometry import Edge
from .calibrate import boundary_conditions
from .tautstring import TautString, edge_string

DEFAULT_M = 400


@dataclass(frozen=True)
class VariationalField:
    x: np.ndarray
    n: np.ndarray
    velocity: np.ndarray      # residual n' + g per cell
    string: TautString

    @property
    def defect(self) -> float:
        return float(self.velocity.max() - self.velocity.min())


def grid(F: ForcingField, p: float, q: float, M: int = DEFAULT_M) -> np.ndarray:
    """M nodes per period, placed so that every interface is a node."""
    eps = F.epsilon
    j0 = math.floor((p / eps - 0.25) * M) + 1
    j1 = math.ceil((q / eps - 0.25) * M) - 1
    inner = eps * (np.arange(j0, j1 + 1) / M + 0.25)
    h = eps / M
    inner = inner[(inner > p + 1e-3 * h) & (inner < q - 1e-3 * h)]
    return np.concatenate(([p], inner, [q]))


def variational_field(edge: Edge, F: ForcingField, M: int = DEFAULT_M) -> VariationalField:
    if M < 100:
        raise ValueError("use at least 100 nodes per period")
    n_p, n_q = boundary_conditions(edge)
    p, q = edge.p[0], edge.q[0]
    ts, n = edge_string(F, p, q, n_p, n_q, nodes=grid(F, p, q, M))
    return VariationalField(ts.x, n, ts.slopes, ts)


def is_calibrable_oracle(edge: Edge, F: ForcingField, M: int = DEFAULT_M,
                         c: float = 0.0, tol: float = 1e-6) -> bool:
    """The selected field calibrates the edge iff its residual velocity is
    constant.  The grid contains every interface, so the discrete problem is
    exact and the grid term c/M may be left at zero."""
    return variational_field(edge, F, M).defect < c / M + tol


# ------------------------------------------------------------- constant forcing

def conserved_U(gamma: float, l1, l2):
    l1, l2 = np.asarray(l1, float), np.asarray(l2, float)
    return 4 * (np.log(l2) - np.log(l1)) + 2 * gamma * (l2 - l1)


@dataclass(frozen=True)
class RectangleTrajectory:
    t: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    U: np.ndarray
    extinction_time: Optional[float]


def constant_forcing_rectangle(gamma: float, l10: float, l20: float, T: float,
                               max_step: float = 1e-3, min_length: float = 1e-6,
                               t_eval=None) -> RectangleTrajectory:
    if min(l10, l20) <= 0:
        raise ValueError("lengths must be positive")

    def rhs(_, y):
        return [-4 / y[1] - 2 * gamma, -4 / y[0] - 2 * gamma]

    def vanish(_, y):
        return min(y) - min_length
    vanish.terminal = True
    vanish.direction = -1
    sol = solve_ivp(rhs, (0, T), [l10, l20], method="DOP853", rtol=1e-12, atol=1e-14,
                    max_step=max_step, events=vanish, t_eval=t_eval, dense_output=True)
    t_ext = float(sol.t_events[0][0]) if sol.t_events[0].size else None
    l1, l2 = sol.y
    return RectangleTrajectory(sol.t, l1, l2, conserved_U(gamma, l1, l2), t_ext)
