"""Edge-cycle form of a polyrectangle used by the flows.

Edges alternate horizontal/vertical; edge i carries one coordinate (y for
horizontal edges, x for vertical ones) and the sign of its outward normal.
Vertex i is the meeting point of edges i-1 and i, so a polygon moves by
changing edge coordinates only and adjacent edges always stay attached.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Polyrectangle, _directions


class Extinct(Exception):
    """The cycle degenerated to fewer than four edges."""


@dataclass
class EdgeCycle:
    horiz: np.ndarray        # bool per edge
    coord: np.ndarray        # float per edge
    nu: np.ndarray           # +-1 per edge

    @classmethod
    def from_polyrectangle(cls, P: Polyrectangle) -> "EdgeCycle":
        v = P.vertices
        d = _directions(v)
        horiz = d[:, 1] == 0
        coord = np.where(horiz, v[:, 1], v[:, 0]).astype(float)
        nu = np.where(horiz, d[:, 0], -d[:, 1]).astype(int)
        return cls(horiz, coord, nu)

    def copy(self) -> "EdgeCycle":
        return EdgeCycle(self.horiz.copy(), self.coord.copy(), self.nu.copy())

    def __len__(self) -> int:
        return len(self.coord)

    # geometry -----------------------------------------------------------
    def vertices(self, coord: Optional[np.ndarray] = None) -> np.ndarray:
        c = self.coord if coord is None else coord
        prev = np.roll(c, 1)
        return np.where(self.horiz[:, None], np.stack([prev, c], 1), np.stack([c, prev], 1))

    def lengths(self, coord: Optional[np.ndarray] = None) -> np.ndarray:
        c = self.coord if coord is None else coord
        span = np.roll(c, -1) - np.roll(c, 1)
        return np.where(self.horiz, span * self.nu, -span * self.nu)

    def ends(self, coord: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper end of each edge along its own axis."""
        c = self.coord if coord is None else coord
        a, b = np.roll(c, 1), np.roll(c, -1)
        return np.minimum(a, b), np.maximum(a, b)

    def convex(self) -> np.ndarray:
        """Convexity of vertex i (between edges i-1 and i)."""
        a, b = np.roll(self.nu, 1), self.nu
        prod = a * b
        into_v = ~self.horiz        # corner where a horizontal edge turns into a vertical one
        return np.where(into_v, prod > 0, prod < 0)

    def chi(self) -> np.ndarray:
        cv = np.where(self.convex(), 1, -1)
        return (cv + np.roll(cv, -1)) // 2

    def n0(self) -> np.ndarray:
        """Shared first field component of zero-curvature horizontal edges
        (normal sign of the neighbouring vertical edges); 0 elsewhere."""
        out = np.zeros(len(self), int)
        chi = self.chi()
        for i in np.flatnonzero(self.horiz & (chi == 0)):
            out[i] = self.nu[i - 1]
        return out

    def polyrectangle(self) -> Polyrectangle:
        return Polyrectangle(self.vertices())

    # topology -----------------------------------------------------------
    def remove(self, i: int, prefer: Optional[np.ndarray] = None) -> tuple["EdgeCycle", list, np.ndarray]:
        """Drop the zero-length edge i and repair the cycle.

        Neighbours that become adjacent along one axis are merged when their
        normals agree and cancel (the shorter one goes) when they oppose.
        `prefer` marks edges whose coordinate wins a merge.  Returns the new
        cycle, the merge records and the surviving original indices.
        """
        keep = [j for j in range(len(self)) if j != i]
        horiz, coord, nu = self.horiz[keep], self.coord[keep], self.nu[keep]
        pref = None if prefer is None else np.asarray(prefer)[keep]
        ids = np.array(keep)
        merges = []
        j = (i - 1) % len(self)
        j = keep.index(j)
        while True:
            n = len(coord)
            if n < 4:
                raise Extinct()
            k = (j + 1) % n
            if horiz[j] != horiz[k]:
                break
            if nu[j] == nu[k]:
                if pref is not None and pref[k] and not pref[j]:
                    coord[j] = coord[k]
                merges.append(("merge", int(ids[j]), int(ids[k])))
                drop = [k]
            else:
                tmp = EdgeCycle(horiz, coord, nu)
                L = tmp.lengths()
                if abs(L[j] - L[k]) <= 1e-12:
                    drop = [j, k]
                elif L[j] < L[k]:
                    drop = [j]
                else:
                    drop = [k]
                merges.append(("cancel",) + tuple(int(ids[d]) for d in drop))
            mask = np.ones(n, bool)
            mask[drop] = False
            first = min(drop)
            horiz, coord, nu, ids = horiz[mask], coord[mask], nu[mask], ids[mask]
            if pref is not None:
                pref = pref[mask]
            j = (first - 1) % len(coord) if len(coord) else 0
        return EdgeCycle(horiz, coord, nu), merges, ids

    def split(self, i: int, xs: list[float], nus: list[int]) -> tuple["EdgeCycle", list[int]]:
        """Break horizontal edge i at abscissas xs by inserting zero-length
        vertical edges with normal signs nus.  Returns the new cycle and the
        indices of the inserted edges."""
        if not self.horiz[i]:
            raise ValueError("only horizontal edges break")
        order = np.argsort(xs)
        if self.nu[i] < 0:         # bottom edges run right to left
            order = order[::-1]
        h, c, n = list(self.horiz), list(self.coord), list(self.nu)
        new_h, new_c, new_n = [True], [c[i]], [n[i]]
        for k in order:
            new_h += [False, True]
            new_c += [float(xs[k]), c[i]]
            new_n += [int(nus[k]), n[i]]
        H = h[:i] + new_h + h[i + 1:]
        C = c[:i] + new_c + c[i + 1:]
        N = n[:i] + new_n + n[i + 1:]
        inserted = [i + 1 + 2 * m for m in range(len(order))]
        return EdgeCycle(np.array(H), np.array(C, float), np.array(N, int)), inserted
