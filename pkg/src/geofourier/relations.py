"""Exact topological relations between point, polyline and polygon pairs.

``relate(a, b)`` names the DE-9IM relation of ``a`` to ``b`` as one of
``equals``, ``disjoint``, ``touches``, ``contains``, ``within`` or
``intersects`` (the last covering proper overlap and crossing). Boundaries
are split at every contact with the other geometry and each piece is
classified as inside, on or outside it; the relation follows from which
piece classes occur. All sign decisions use exact predicates.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

from .errors import UnsupportedPair
from .geometry import XY, Geometry, MultiPolygon, Point, Polygon, Polyline
from .predicates import (
    BOUNDARY,
    INSIDE,
    OUTSIDE,
    orient2d,
    point_in_ring,
    point_on_segment,
    segments_intersect,
)

Edge = Tuple[XY, XY]


def _polygons(g) -> Tuple[Polygon, ...]:
    return g.polygons if isinstance(g, MultiPolygon) else (g,)


def locate_in_polygon(p: XY, g) -> int:
    """INSIDE, BOUNDARY or OUTSIDE of a polygon or multipolygon region."""
    for pg in _polygons(g):
        loc = point_in_ring(p, pg.exterior)
        if loc == OUTSIDE:
            continue
        if loc == BOUNDARY:
            return BOUNDARY
        for h in pg.holes:
            hl = point_in_ring(p, h)
            if hl == BOUNDARY:
                return BOUNDARY
            if hl == INSIDE:
                break
        else:
            return INSIDE
    return OUTSIDE


def _edges_of_polygonal(g) -> List[Edge]:
    return [(r[i], r[i + 1]) for pg in _polygons(g) for r in pg.rings for i in range(len(r) - 1)]


def _edges_of_polyline(pl: Polyline) -> List[Edge]:
    return [(a, b) for a, b in zip(pl.coords[:-1], pl.coords[1:]) if a != b]


def _split_params(a: XY, b: XY, others: Sequence[Edge]) -> List[float]:
    """Parameters in [0, 1] along a->b where it meets any of ``others``."""
    ts = {0.0, 1.0}
    dx, dy = b[0] - a[0], b[1] - a[1]
    den_ab = dx * dx + dy * dy

    def param(p: XY) -> float:
        return ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / den_ab

    for c, d in others:
        if not segments_intersect(a, b, c, d):
            continue
        o1, o2 = orient2d(a, b, c), orient2d(a, b, d)
        if o1 == 0 and o2 == 0:
            for p in (c, d):
                if point_on_segment(p, a, b):
                    ts.add(param(p))
            continue
        if o1 == 0 and point_on_segment(c, a, b):
            ts.add(param(c))
            continue
        if o2 == 0 and point_on_segment(d, a, b):
            ts.add(param(d))
            continue
        # proper crossing or an endpoint of a-b lying on c-d
        ex, ey = d[0] - c[0], d[1] - c[1]
        den = dx * ey - dy * ex
        t = ((c[0] - a[0]) * ey - (c[1] - a[1]) * ex) / den
        ts.add(min(1.0, max(0.0, t)))
    return sorted(ts)


def _piece_on_edges(p0: XY, p1: XY, edges: Sequence[Edge]) -> bool:
    for c, d in edges:
        if orient2d(c, d, p0) == 0 and orient2d(c, d, p1) == 0:
            if point_on_segment(p0, c, d) and point_on_segment(p1, c, d):
                return True
    return False


def _classify_pieces(edges: Sequence[Edge], other_edges: Sequence[Edge], locate) -> set:
    """Classes {INSIDE, BOUNDARY, OUTSIDE} of boundary pieces against the other shape."""
    found = set()
    for a, b in edges:
        ts = _split_params(a, b, other_edges)
        for t0, t1 in zip(ts[:-1], ts[1:]):
            if t1 - t0 <= 0:
                continue
            p0 = a if t0 == 0.0 else (a[0] + t0 * (b[0] - a[0]), a[1] + t0 * (b[1] - a[1]))
            p1 = b if t1 == 1.0 else (a[0] + t1 * (b[0] - a[0]), a[1] + t1 * (b[1] - a[1]))
            if _piece_on_edges(p0, p1, other_edges):
                found.add(BOUNDARY)
                continue
            tm = 0.5 * (t0 + t1)
            mid = (a[0] + tm * (b[0] - a[0]), a[1] + tm * (b[1] - a[1]))
            found.add(locate(mid))
    return found


def _any_contact(ea: Sequence[Edge], eb: Sequence[Edge]) -> bool:
    return any(segments_intersect(a, b, c, d) for a, b in ea for c, d in eb)


def _relate_area_area(a, b) -> str:
    ea, eb = _edges_of_polygonal(a), _edges_of_polygonal(b)
    a_cls = _classify_pieces(ea, eb, lambda p: locate_in_polygon(p, b))
    b_cls = _classify_pieces(eb, ea, lambda p: locate_in_polygon(p, a))
    a_in, a_out = INSIDE in a_cls, OUTSIDE in a_cls
    b_in, b_out = INSIDE in b_cls, OUTSIDE in b_cls
    if not (a_in or a_out or b_in or b_out):
        return "equals"
    if b_in and not b_out and not a_in:
        return "contains"
    if a_in and not a_out and not b_in:
        return "within"
    if a_in or b_in:
        return "intersects"
    # no boundary enters the other's interior: interiors are disjoint
    return "touches" if _any_contact(ea, eb) else "disjoint"


def _relate_line_area(line: Polyline, area) -> str:
    el, ea = _edges_of_polyline(line), _edges_of_polygonal(area)
    cls = _classify_pieces(el, ea, lambda p: locate_in_polygon(p, area))
    if INSIDE in cls and OUTSIDE not in cls:
        return "within"
    if INSIDE in cls:
        return "intersects"
    if BOUNDARY in cls or _any_contact(el, ea):
        return "touches"
    return "disjoint"


def _relate_line_line(a: Polyline, b: Polyline) -> str:
    ea, eb = _edges_of_polyline(a), _edges_of_polyline(b)
    if not _any_contact(ea, eb):
        return "disjoint"
    if a == b or (a.coords == tuple(reversed(b.coords))):
        return "equals"
    return "intersects"


def _relate_point(p: Point, g) -> str:
    if isinstance(g, Point):
        return "equals" if p == g else "disjoint"
    if isinstance(g, Polyline):
        on = any(point_on_segment(p.xy, a, b) for a, b in _edges_of_polyline(g))
        if not on:
            return "disjoint"
        # a polyline's DE-9IM boundary is its two endpoints
        return "touches" if p.xy in (g.coords[0], g.coords[-1]) else "within"
    loc = locate_in_polygon(p.xy, g)
    return {INSIDE: "within", BOUNDARY: "touches", OUTSIDE: "disjoint"}[loc]


_CONVERSE = {"contains": "within", "within": "contains"}


def relate(a: Geometry, b: Geometry) -> str:
    """Named DE-9IM relation of ``a`` to ``b``."""
    da, db = _dim(a), _dim(b)
    if da > db:
        r = relate(b, a)
        return _CONVERSE.get(r, r)
    if isinstance(a, Point):
        return _relate_point(a, b)
    if isinstance(a, Polyline) and isinstance(b, Polyline):
        return _relate_line_line(a, b)
    if isinstance(a, Polyline):
        return _relate_line_area(a, b)
    return _relate_area_area(a, b)


def _dim(g) -> int:
    if isinstance(g, Point):
        return 0
    if isinstance(g, Polyline):
        return 1
    if isinstance(g, (Polygon, MultiPolygon)):
        return 2
    raise UnsupportedPair(type(g).__name__)
