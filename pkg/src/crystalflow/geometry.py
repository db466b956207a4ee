"""Axis-aligned polygons ("polyrectangles"): normalization, edges, vertex
field values, containment and distances.

Vertices are stored clockwise, starting at the upper-left corner of the
leftmost vertical edge, so the first edge is always horizontal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import shapely
from shapely.geometry import LinearRing, Polygon

MERGE_TOL = 1e-9


class GeometryError(ValueError):
    """Raised for malformed polyrectangles."""


@dataclass(frozen=True)
class Edge:
    axis: str                      # "h" or "v"
    p: tuple[float, float]         # lexicographically smaller endpoint
    q: tuple[float, float]
    normal: tuple[int, int]        # outward unit normal
    chi: int                       # convexity factor
    length: float
    index: int = -1                # position in the vertex cycle
    n0: Optional[int] = None       # shared first field component when chi == 0

    @property
    def coord(self) -> float:
        """The constant coordinate (y for horizontal edges, x for vertical)."""
        return self.p[1] if self.axis == "h" else self.p[0]

    @property
    def boundary_values(self) -> tuple[int, int]:
        """First component of the vertex field at (p, q); horizontal edges only."""
        if self.axis != "h":
            raise GeometryError("boundary values are defined for horizontal edges")
        if self.chi == 1:
            return (-1, 1)
        if self.chi == -1:
            return (1, -1)
        if self.n0 not in (-1, 1):
            raise GeometryError("zero-curvature edge needs n0 in {-1, 1}")
        return (self.n0, self.n0)


def horizontal_edge(p: float, q: float, chi: int, n0: Optional[int] = None,
                    y: float = 0.0, top: bool = True) -> Edge:
    """Stand-alone horizontal edge [p, q] x {y}, handy for calibration queries."""
    if not q > p:
        raise GeometryError("need p < q")
    if chi not in (-1, 0, 1):
        raise GeometryError("chi must be -1, 0 or 1")
    if chi == 0 and n0 not in (-1, 1):
        raise GeometryError("chi == 0 requires n0 = +-1")
    return Edge("h", (float(p), float(y)), (float(q), float(y)),
                (0, 1 if top else -1), int(chi), float(q - p),
                n0=n0 if chi == 0 else None)


def _dedupe(v: np.ndarray, tol: float) -> np.ndarray:
    keep = []
    for i in range(len(v)):
        if not keep or np.max(np.abs(v[i] - v[keep[-1]])) > tol:
            keep.append(i)
    if len(keep) > 1 and np.max(np.abs(v[keep[0]] - v[keep[-1]])) <= tol:
        keep.pop()
    return v[keep]


def _drop_collinear(v: np.ndarray, tol: float) -> np.ndarray:
    changed = True
    while changed and len(v) >= 3:
        changed = False
        n = len(v)
        for i in range(n):
            a, b, c = v[i - 1], v[i], v[(i + 1) % n]
            same_x = abs(a[0] - b[0]) <= tol and abs(b[0] - c[0]) <= tol
            same_y = abs(a[1] - b[1]) <= tol and abs(b[1] - c[1]) <= tol
            if same_x or same_y:
                d1, d2 = b - a, c - b
                if float(np.dot(d1, d2)) < 0:
                    raise GeometryError("edge folds back on itself")
                v = np.delete(v, i, axis=0)
                changed = True
                break
    return v


def _canonical_start(v: np.ndarray) -> np.ndarray:
    order = np.lexsort((-v[:, 1], v[:, 0]))
    return np.roll(v, -int(order[0]), axis=0)


class Polyrectangle:
    """Closed simple axis-aligned polygon with clockwise vertices."""

    __slots__ = ("vertices",)

    def __init__(self, points: Iterable[Sequence[float]], *, tol: float = MERGE_TOL):
        self.vertices = normalize_vertices(np.asarray(list(points), dtype=float), tol)
        self.vertices.setflags(write=False)

    @classmethod
    def rectangle(cls, width: float, height: float,
                  center: tuple[float, float] = (0.0, 0.0)) -> "Polyrectangle":
        cx, cy = center
        a, b = width / 2.0, height / 2.0
        return cls([(cx - a, cy + b), (cx + a, cy + b), (cx + a, cy - b), (cx - a, cy - b)])

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"Polyrectangle({self.vertices.tolist()})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, Polyrectangle) and self.vertices.shape == other.vertices.shape
                and bool(np.allclose(self.vertices, other.vertices, atol=MERGE_TOL, rtol=0)))

    def to_json(self) -> list[list[float]]:
        return self.vertices.tolist()

    def translate(self, dx: float, dy: float) -> "Polyrectangle":
        return Polyrectangle(self.vertices + np.array([dx, dy]))

    def reflect_x(self) -> "Polyrectangle":
        """Mirror image through the line x = 0."""
        return Polyrectangle(self.vertices * np.array([-1.0, 1.0]))

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return -0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def bounds(self) -> tuple[float, float, float, float]:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def shape(self) -> Polygon:
        return Polygon(self.vertices)


def normalize_vertices(v: np.ndarray, tol: float = MERGE_TOL) -> np.ndarray:
    if v.ndim != 2 or v.shape[1] != 2:
        raise GeometryError("expected an array of (x, y) pairs")
    v = _dedupe(v.copy(), tol)
    if len(v) < 4:
        raise GeometryError("fewer than 4 vertices")
    # every move must be axis-aligned
    d = np.roll(v, -1, axis=0) - v
    moves_x = np.abs(d[:, 0]) > tol
    moves_y = np.abs(d[:, 1]) > tol
    if np.any(moves_x & moves_y):
        raise GeometryError("edges must be axis-aligned")
    v = _drop_collinear(v, tol)
    if len(v) < 4 or len(v) % 2:
        raise GeometryError("fewer than 4 vertices after merging")
    # snap the shared coordinate of each edge exactly
    n = len(v)
    for i in range(n):
        j = (i + 1) % n
        if abs(v[i, 0] - v[j, 0]) <= tol:
            v[j, 0] = v[i, 0]
        else:
            v[j, 1] = v[i, 1]
    if not LinearRing(v).is_simple:
        raise GeometryError("polygon is self-intersecting")
    x, y = v[:, 0], v[:, 1]
    signed = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    if signed > 0:
        v = v[::-1].copy()
    return _canonical_start(v)


def normalize(P: Polyrectangle | Iterable[Sequence[float]]) -> Polyrectangle:
    return Polyrectangle(P.vertices if isinstance(P, Polyrectangle) else P)


def _directions(v: np.ndarray) -> np.ndarray:
    return np.sign(np.roll(v, -1, axis=0) - v).astype(int)


def corner_convexity(P: Polyrectangle) -> np.ndarray:
    """+1 for convex vertices, -1 for concave ones (clockwise traversal)."""
    d = _directions(P.vertices)
    din = np.roll(d, 1, axis=0)
    cross = din[:, 0] * d[:, 1] - din[:, 1] * d[:, 0]
    return np.where(cross < 0, 1, -1)


def edges(P: Polyrectangle) -> list[Edge]:
    v = P.vertices
    n = len(v)
    d = _directions(v)
    conv = corner_convexity(P)
    vf = vertex_field(P)
    out = []
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        normal = (int(-d[i, 1]), int(d[i, 0]))
        chi = (int(conv[i]) + int(conv[(i + 1) % n])) // 2
        horiz = d[i, 1] == 0
        p, q = (a, b) if tuple(a) < tuple(b) else (b, a)
        n0 = None
        if horiz and chi == 0:
            n0 = vf[i][0]
        out.append(Edge("h" if horiz else "v", (float(p[0]), float(p[1])),
                        (float(q[0]), float(q[1])), normal, chi,
                        float(np.abs(b - a).sum()), index=i, n0=n0))
    return out


def vertex_field(P: Polyrectangle) -> list[tuple[int, int]]:
    """Corner of the Wulff square assigned to each vertex."""
    v = P.vertices
    n = len(v)
    d = _directions(v)
    normals = np.stack([-d[:, 1], d[:, 0]], axis=1)
    out = []
    for i in range(n):
        a, b = normals[i - 1], normals[i]
        s1 = a[0] if a[0] != 0 else b[0]
        s2 = a[1] if a[1] != 0 else b[1]
        out.append((int(s1), int(s2)))
    return out


def _segments(P: Polyrectangle) -> tuple[np.ndarray, np.ndarray]:
    v = P.vertices
    w = np.roll(v, -1, axis=0)
    return np.minimum(v, w), np.maximum(v, w)


def _box_gap(pts: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Max-norm distance from each point to each axis-aligned segment (N x K)."""
    gx = np.maximum(0.0, np.maximum(lo[None, :, 0] - pts[:, None, 0], pts[:, None, 0] - hi[None, :, 0]))
    gy = np.maximum(0.0, np.maximum(lo[None, :, 1] - pts[:, None, 1], pts[:, None, 1] - hi[None, :, 1]))
    return np.maximum(gx, gy)


def region_distance(pts: np.ndarray, B: Polyrectangle) -> np.ndarray:
    """Max-norm distance from points to the closed region of B."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    lo, hi = _segments(B)
    d = _box_gap(pts, lo, hi).min(axis=1)
    inside = shapely.contains_xy(B.shape(), pts[:, 0], pts[:, 1])
    return np.where(inside, 0.0, d)


def _directed_hausdorff(A: Polyrectangle, B: Polyrectangle, h: float) -> float:
    """sup over the region A of the distance to the region B (max-norm)."""
    v = A.vertices
    nxt = np.roll(v, -1, axis=0)
    best = 0.0
    for a, b in zip(v, nxt):
        L = float(np.abs(b - a).sum())
        s = np.linspace(0.0, 1.0, max(2, int(np.ceil(L / h)) + 1))
        d = region_distance(a + s[:, None] * (b - a), B)
        j = int(np.argmax(d))
        best = max(best, float(d[j]))
        if d[j] <= 0.0:
            continue
        # distance is piecewise linear along the segment: zoom on the peak
        for i in np.argsort(d)[::-1][:3]:
            lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]
            for _ in range(6):
                z = np.linspace(lo, hi, 17)
                dz = region_distance(a + z[:, None] * (b - a), B)
                k = int(np.argmax(dz))
                best = max(best, float(dz[k]))
                lo, hi = z[max(k - 1, 0)], z[min(k + 1, 16)]
    return best


def hausdorff_distance(A: Polyrectangle, B: Polyrectangle, resolution: float = 1e-3) -> float:
    """Hausdorff distance between the closed regions of A and B in the max-norm,
    the norm whose unit ball is the Wulff square."""
    if A == B:
        return 0.0
    lo = np.minimum(A.vertices.min(0), B.vertices.min(0))
    hi = np.maximum(A.vertices.max(0), B.vertices.max(0))
    h = resolution * float(np.max(hi - lo))
    return max(_directed_hausdorff(A, B, h), _directed_hausdorff(B, A, h))


def contains(A: Polyrectangle, B: Polyrectangle, tol: float = MERGE_TOL) -> bool:
    """True iff the region of B lies inside the region of A."""
    return bool(A.shape().buffer(tol, join_style="mitre").covers(B.shape()))


def boundary_gap(A: Polyrectangle, B: Polyrectangle) -> float:
    """Minimum max-norm distance between the boundaries of A and B."""
    alo, ahi = _segments(A)
    blo, bhi = _segments(B)
    gx = np.maximum(0.0, np.maximum(blo[None, :, 0] - ahi[:, None, 0], alo[:, None, 0] - bhi[None, :, 0]))
    gy = np.maximum(0.0, np.maximum(blo[None, :, 1] - ahi[:, None, 1], alo[:, None, 1] - bhi[None, :, 1]))
    return float(np.maximum(gx, gy).min())
