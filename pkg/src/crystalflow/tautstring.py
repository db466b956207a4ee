"""Taut string through a tube: minimise sum (m[i+1] - m[i])^2 / h[i] subject to
lo <= m <= hi at interior nodes, with both end values fixed.

The minimiser is the shortest path through the tube, so it is built directly
with the funnel construction: from the current anchor, sweep the visibility
cone forward until it closes; the node that closed it from the other side is
the next contact.  Each sweep is vectorised and no iteration can cycle.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .forcing import ForcingField, interfaces_between


class TautStringError(RuntimeError):
    pass


class TautString(NamedTuple):
    x: np.ndarray          # nodes
    m: np.ndarray          # string heights
    slopes: np.ndarray     # one per cell
    contacts: np.ndarray   # node indices where the string bends


def solve(x, lo, hi, m_start: float, m_end: float) -> TautString:
    x = np.asarray(x, dtype=float)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    n = len(x)
    if n < 2 or np.any(np.diff(x) <= 0):
        raise TautStringError("nodes must be strictly increasing")
    if np.any(lo > hi):
        raise TautStringError("empty tube")
    lo[0] = hi[0] = m_start
    lo[-1] = hi[-1] = m_end
    anchors, heights = [0], [m_start]
    a, ya = 0, m_start
    while a < n - 1:
        dx = x[a + 1:] - x[a]
        s_lo = np.maximum.accumulate((lo[a + 1:] - ya) / dx)
        s_hi = np.minimum.accumulate((hi[a + 1:] - ya) / dx)
        shut = np.flatnonzero(s_lo > s_hi)
        if shut.size == 0:
            anchors.append(n - 1)
            heights.append(m_end)
            break
        j = int(shut[0])
        if j == 0:
            raise TautStringError("tube pinches off")
        if (hi[a + 1 + j] - ya) / dx[j] < s_lo[j - 1]:
            k = int(np.argmax((lo[a + 1:a + 1 + j] - ya) / dx[:j]))
            a, ya = a + 1 + k, lo[a + 1 + k]
        else:
            k = int(np.argmin((hi[a + 1:a + 1 + j] - ya) / dx[:j]))
            a, ya = a + 1 + k, hi[a + 1 + k]
        anchors.append(a)
        heights.append(ya)
    m = np.interp(x, x[anchors], heights)
    return TautString(x, m, np.diff(m) / np.diff(x), np.array(anchors[1:-1], dtype=int))


def edge_string(F: ForcingField, p: float, q: float, n_p: float, n_q: float,
                nodes: np.ndarray | None = None) -> tuple[TautString, np.ndarray]:
    """Variational field on [p, q] in the shifted variable m = n + G.

    With the default nodes (interfaces plus ends) the answer is exact, because
    the string can only bend where g jumps.  Returns the string and n.
    """
    if nodes is None:
        nodes = np.concatenate(([p], interfaces_between(F, p, q), [q]))
    G = F.primitive(nodes) - F.primitive(p)
    ts = solve(nodes, G - 1.0, G + 1.0, n_p, n_q + G[-1])
    return ts, ts.m - G
