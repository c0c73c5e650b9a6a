"""Split polylines into segments and polygons into non-overlapping triangles.

Polygons are triangulated by ear clipping after bridging every hole into the
exterior ring. An optional Lawson edge-flip pass then turns the result into the
constrained Delaunay triangulation of the same vertex set; ring edges are never
flipped because each borders exactly one triangle. No Steiner points are
inserted, so every triangle vertex is an input vertex. Boundary vertices that
are exactly collinear with their neighbours are clipped without emitting a
(zero-area) triangle.

Orientation and in-circle signs are exact (see ``predicates``), so
near-collinear input cannot flip a decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import EmptyResult, TriangulationError, ValidationError
from .geometry import (
    MIN_SEGMENT_LENGTH,
    XY,
    MultiPolygon,
    Point,
    Polygon,
    Polyline,
    warn_short_segments,
)
from .predicates import incircle, orient2d

MIN_TRIANGLE_AREA = 1e-14


@dataclass(frozen=True)
class Segment:
    q: Point
    r: Point

    def __post_init__(self):
        if self.length <= MIN_SEGMENT_LENGTH:
            raise ValidationError(f"segment shorter than {MIN_SEGMENT_LENGTH}")

    @property
    def length(self) -> float:
        return math.hypot(self.r.x - self.q.x, self.r.y - self.q.y)


@dataclass(frozen=True)
class Triangle:
    q: Point
    r: Point
    s: Point

    def __post_init__(self):
        a = 0.5 * orient2d(self.q.xy, self.r.xy, self.s.xy)
        if abs(a) <= MIN_TRIANGLE_AREA:
            raise ValidationError(f"degenerate triangle (area {a:g})")
        if a < 0:
            q, r = self.r, self.q
            object.__setattr__(self, "q", q)
            object.__setattr__(self, "r", r)

    @classmethod
    def from_xy(cls, q: XY, r: XY, s: XY) -> "Triangle":
        return cls(Point(*q), Point(*r), Point(*s))

    @property
    def area(self) -> float:
        return 0.5 * orient2d(self.q.xy, self.r.xy, self.s.xy)

    def as_array(self) -> np.ndarray:
        return np.array([self.q.xy, self.r.xy, self.s.xy])


def split_polyline(pl: Polyline) -> List[Segment]:
    """Consecutive vertex pairs, dropping segments at or below the length floor."""
    warn_short_segments(pl)
    segs = []
    for a, b in zip(pl.coords[:-1], pl.coords[1:]):
        if math.hypot(b[0] - a[0], b[1] - a[1]) > MIN_SEGMENT_LENGTH:
            segs.append(Segment(Point(*a), Point(*b)))
    if not segs:
        raise EmptyResult("all polyline segments are degenerate")
    return segs


# ---------------------------------------------------------------- hole bridging


def _locally_inside(prev: XY, at: XY, nxt: XY, target: XY) -> bool:
    """Does the ray at->target start into the region left of prev->at->nxt?"""
    if orient2d(prev, at, nxt) >= 0:
        return orient2d(prev, at, target) > 0 and orient2d(at, nxt, target) > 0
    return orient2d(prev, at, target) > 0 or orient2d(at, nxt, target) > 0


def _bridge_clear(m: XY, p: XY, edges: Sequence[Tuple[XY, XY]]) -> bool:
    """Segment m-p touches no edge except at its own endpoints."""
    lo_x, hi_x = min(m[0], p[0]), max(m[0], p[0])
    lo_y, hi_y = min(m[1], p[1]), max(m[1], p[1])
    for a, b in edges:
        if max(a[0], b[0]) < lo_x or min(a[0], b[0]) > hi_x:
            continue
        if max(a[1], b[1]) < lo_y or min(a[1], b[1]) > hi_y:
            continue
        shares = {a, b} & {m, p}
        if shares:
            # an incident edge must not run along the bridge
            for other in (a, b):
                if other in (m, p):
                    continue
                if orient2d(m, p, other) == 0 and (
                    min(m[0], p[0]) <= other[0] <= max(m[0], p[0])
                    and min(m[1], p[1]) <= other[1] <= max(m[1], p[1])
                ):
                    return False
            continue
        o1, o2 = orient2d(a, b, m), orient2d(a, b, p)
        o3, o4 = orient2d(m, p, a), orient2d(m, p, b)
        if o1 * o2 < 0 and o3 * o4 < 0:
            return False
        for o, pt, s0, s1 in ((o3, a, m, p), (o4, b, m, p), (o1, m, a, b), (o2, p, a, b)):
            if o == 0 and (
                min(s0[0], s1[0]) <= pt[0] <= max(s0[0], s1[0])
                and min(s0[1], s1[1]) <= pt[1] <= max(s0[1], s1[1])
            ):
                return False
    return True


def _ring_edges(ring: Sequence[XY]) -> List[Tuple[XY, XY]]:
    return [(ring[i], ring[(i + 1) % len(ring)]) for i in range(len(ring))]


def _bridge_holes(outer: List[XY], holes: List[List[XY]]) -> List[XY]:
    """Splice CW holes into the CCW outer ring; rings are open vertex lists."""
    holes = sorted(holes, key=lambda h: -max(x for x, _ in h))
    for hi, hole in enumerate(holes):
        k = max(range(len(hole)), key=lambda i: (hole[i][0], -hole[i][1]))
        m = hole[k]
        m_prev, m_next = hole[k - 1], hole[(k + 1) % len(hole)]
        edges = _ring_edges(outer) + [e for h in holes[hi:] for e in _ring_edges(h)]
        order = sorted(
            range(len(outer)),
            key=lambda i: ((outer[i][0] - m[0]) ** 2 + (outer[i][1] - m[1]) ** 2, i),
        )
        chosen = None
        for i in order:
            p = outer[i]
            if p == m:
                continue
            if not _locally_inside(outer[i - 1], p, outer[(i + 1) % len(outer)], m):
                continue
            if not _locally_inside(m_prev, m, m_next, p):
                continue
            if _bridge_clear(m, p, edges):
                chosen = i
                break
        if chosen is None:
            raise TriangulationError("no visible vertex to bridge a hole")
        spliced = hole[k:] + hole[:k] + [m]
        outer = outer[: chosen + 1] + spliced + outer[chosen:]
    return outer


# ---------------------------------------------------------------- ear clipping


def _point_in_closed_triangle(p: XY, a: XY, b: XY, c: XY) -> bool:
    return orient2d(a, b, p) >= 0 and orient2d(b, c, p) >= 0 and orient2d(c, a, p) >= 0


def _ear_clip(verts: List[XY]) -> List[Tuple[int, int, int]]:
    """Triangulate a weakly simple CCW vertex loop; returns index triples."""
    n = len(verts)
    prev = [(i - 1) % n for i in range(n)]
    nxt = [(i + 1) % n for i in range(n)]
    alive = n
    tris: List[Tuple[int, int, int]] = []
    i = 0
    stall = 0
    while alive > 2:
        p, nx = prev[i], nxt[i]
        a, b, c = verts[p], verts[i], verts[nx]
        o = orient2d(a, b, c)
        clip = False
        if o == 0:
            clip = True  # collinear or duplicate: nothing to emit
        elif o > 0:
            clip = True
            j = nxt[nx]
            while j != p:
                v = verts[j]
                if v != a and v != b and v != c and _point_in_closed_triangle(v, a, b, c):
                    clip = False
                    break
                j = nxt[j]
            if clip:
                tris.append((p, i, nx))
        if clip:
            nxt[p], prev[nx] = nx, p
            alive -= 1
            i = p
            stall = 0
        else:
            i = nx
            stall += 1
            if stall > alive:
                raise TriangulationError("ear clipping stalled (invalid or self-touching polygon)")
    return tris


# ---------------------------------------------------------------- Delaunay flips


def _delaunay_flip(pts: List[XY], tris: List[List[int]]) -> List[List[int]]:
    """Lawson flips on edges shared by two triangles until locally Delaunay."""
    for _ in range(len(tris) * len(tris) + 10):
        edges: Dict[Tuple[int, int], List[int]] = {}
        for t, (a, b, c) in enumerate(tris):
            for u, v in ((a, b), (b, c), (c, a)):
                edges.setdefault((min(u, v), max(u, v)), []).append(t)
        touched = set()
        for (u, v), ts in sorted(edges.items()):
            if len(ts) != 2 or ts[0] in touched or ts[1] in touched:
                continue
            t1, t2 = ts
            tri1 = tris[t1]
            a = next(x for x in tri1 if x not in (u, v))
            b = next(x for x in tris[t2] if x not in (u, v))
            k = tri1.index(a)
            e0, e1 = tri1[(k + 1) % 3], tri1[(k + 2) % 3]
            pa, pb, p0, p1 = pts[a], pts[b], pts[e0], pts[e1]
            if incircle(p0, p1, pa, pb) <= 0:
                continue
            # quad a-e0-b-e1 must be strictly convex for the flip to stay valid
            if orient2d(pa, p0, pb) <= 0 or orient2d(pb, p1, pa) <= 0:
                continue
            tris[t1] = [a, e0, b]
            tris[t2] = [b, e1, a]
            touched.update(ts)
        if not touched:
            return tris
    raise TriangulationError("edge flipping did not converge")


def _triangulate_single(pg: Polygon, method: str) -> List[Triangle]:
    outer = list(pg.exterior[:-1])
    holes = [list(h[:-1]) for h in pg.holes]
    loop = _bridge_holes(outer, holes) if holes else outer
    idx = _ear_clip(loop)
    # identify duplicate bridge vertices before flipping
    ids: Dict[XY, int] = {}
    pts: List[XY] = []
    for v in loop:
        if v not in ids:
            ids[v] = len(pts)
            pts.append(v)
    tris = [[ids[loop[a]], ids[loop[b]], ids[loop[c]]] for a, b, c in idx]
    # slivers at or below the area floor carry no measurable mass; drop them
    tris = [
        t for t in tris if 0.5 * orient2d(pts[t[0]], pts[t[1]], pts[t[2]]) > MIN_TRIANGLE_AREA
    ]
    if method == "cdt":
        tris = _delaunay_flip(pts, tris)
    elif method != "ear":
        raise ValueError(f"unknown triangulation method {method!r}")
    return [Triangle.from_xy(pts[a], pts[b], pts[c]) for a, b, c in tris]


def triangulate(pg, method: str = "cdt") -> List[Triangle]:
    """Partition a polygon (or multipolygon) into CCW triangles.

    ``method`` is ``"ear"`` for plain ear clipping or ``"cdt"`` to add the
    constrained Delaunay flip pass.
    """
    if isinstance(pg, MultiPolygon):
        return [t for p in pg.polygons for t in _triangulate_single(p, method)]
    if not isinstance(pg, Polygon):
        raise TriangulationError(f"cannot triangulate {type(pg).__name__}")
    tris = _triangulate_single(pg, method)
    if not tris:
        raise TriangulationError("triangulation produced no triangles")
    return tris


def fan_triangulate(vertices: Sequence[XY], apex: int = 0) -> List[Triangle]:
    """Fan from one vertex of a convex ring (open vertex list)."""
    n = len(vertices)
    a = vertices[apex]
    return [
        Triangle.from_xy(a, vertices[(apex + i) % n], vertices[(apex + i + 1) % n])
        for i in range(1, n - 1)
    ]


def triangles_as_array(tris: Sequence[Triangle]) -> np.ndarray:
    """Stack triangles into a (T, 3, 2) array."""
    return np.array([[t.q.xy, t.r.xy, t.s.xy] for t in tris], dtype=float).reshape(-1, 3, 2)


def triangulation_geojson(tris: Sequence[Triangle]) -> dict:
    """Debug dump as a GeoJSON MultiPolygon."""
    return {
        "type": "MultiPolygon",
        "coordinates": [
            [[list(t.q.xy), list(t.r.xy), list(t.s.xy), list(t.q.xy)]] for t in tris
        ],
    }


__all__ = [
    "Segment",
    "Triangle",
    "fan_triangulate",
    "split_polyline",
    "triangles_as_array",
    "triangulate",
    "triangulation_geojson",
]
