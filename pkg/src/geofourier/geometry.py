"""Geometry data model: construction, validation, WKT/GeoJSON I/O, normalization.

Geometries are immutable. Coordinates are stored as tuples of float pairs so
values hash, compare exactly and round-trip through text without loss. Polygon
rings are canonicalized on construction: exterior counter-clockwise, holes
clockwise.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DegenerateBBox,
    ParseError,
    UnsupportedGeometry,
    ValidationError,
)
from .predicates import (
    BOUNDARY,
    INSIDE,
    OUTSIDE,
    point_in_ring,
    point_on_segment,
    segments_intersect,
)

XY = Tuple[float, float]
Ring = Tuple[XY, ...]

MIN_SEGMENT_LENGTH = 1e-12


def _as_xy(p) -> XY:
    try:
        x, y = float(p[0]), float(p[1])
    except (TypeError, ValueError, IndexError) as exc:
        raise ValidationError(f"bad coordinate {p!r}") from exc
    if len(p) != 2:
        raise ValidationError(f"expected 2D coordinate, got {p!r}")
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValidationError(f"non-finite coordinate {p!r}")
    return (x, y)


def signed_area(ring: Sequence[XY]) -> float:
    """Shoelace signed area of a closed ring; positive iff counter-clockwise.

    All cross products go through ``math.fsum`` so the result is the correctly
    rounded sum of the rounded products, which makes reversal an exact negation.
    """
    terms = []
    for (x0, y0), (x1, y1) in zip(ring[:-1], ring[1:]):
        terms.append(x0 * y1)
        terms.append(-(x1 * y0))
    return 0.5 * math.fsum(terms)


def _ring_is_simple(ring: Ring) -> bool:
    n = len(ring) - 1
    for i in range(n):
        a, b = ring[i], ring[i + 1]
        for j in range(i + 1, n):
            c, d = ring[j], ring[j + 1]
            if j == i + 1:
                # consecutive edges share b == c; they must not fold back
                if point_on_segment(d, a, b) or point_on_segment(a, c, d):
                    return False
            elif i == 0 and j == n - 1:
                # closing edge shares a == d
                if point_on_segment(c, a, b) or point_on_segment(b, c, d):
                    return False
            elif segments_intersect(a, b, c, d):
                return False
    return True


def _check_ring(coords: Iterable, what: str) -> Ring:
    ring = tuple(_as_xy(p) for p in coords)
    if len(ring) < 4:
        raise ValidationError(f"{what} needs at least 4 coordinates incl. closing repeat")
    if ring[0] != ring[-1]:
        raise ValidationError(f"{what} is not closed")
    for a, b in zip(ring[:-1], ring[1:]):
        if a == b:
            raise ValidationError(f"{what} has repeated consecutive vertex {a}")
    if len(set(ring[:-1])) < 3:
        raise ValidationError(f"{what} has fewer than 3 distinct vertices")
    if signed_area(ring) == 0.0:
        raise ValidationError(f"{what} has zero area")
    if not _ring_is_simple(ring):
        raise ValidationError(f"{what} is self-intersecting")
    return ring


def _oriented(ring: Ring, ccw: bool) -> Ring:
    if (signed_area(ring) > 0) != ccw:
        return tuple(reversed(ring))
    return ring


def _rings_disjoint(r1: Ring, r2: Ring) -> bool:
    for a, b in zip(r1[:-1], r1[1:]):
        for c, d in zip(r2[:-1], r2[1:]):
            if segments_intersect(a, b, c, d):
                return False
    return True


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        x, y = _as_xy((self.x, self.y))
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def xy(self) -> XY:
        return (self.x, self.y)


Point2 = Point


@dataclass(frozen=True)
class Polyline:
    coords: Tuple[XY, ...]

    def __post_init__(self):
        coords = tuple(_as_xy(p) for p in self.coords)
        if len(coords) < 2:
            raise ValidationError("polyline needs at least 2 vertices")
        if coords[0] == coords[-1]:
            raise ValidationError("polyline first and last vertices coincide")
        if not any(
            math.hypot(b[0] - a[0], b[1] - a[1]) > MIN_SEGMENT_LENGTH
            for a, b in zip(coords[:-1], coords[1:])
        ):
            raise ValidationError("polyline has no segment of positive length")
        object.__setattr__(self, "coords", coords)

    @property
    def length(self) -> float:
        return math.fsum(
            math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(self.coords[:-1], self.coords[1:])
        )


@dataclass(frozen=True)
class Polygon:
    exterior: Ring
    holes: Tuple[Ring, ...] = field(default=())

    def __post_init__(self):
        ext = _oriented(_check_ring(self.exterior, "exterior ring"), ccw=True)
        holes = tuple(
            _oriented(_check_ring(h, f"hole ring {i}"), ccw=False) for i, h in enumerate(self.holes)
        )
        for i, h in enumerate(holes):
            if not _rings_disjoint(ext, h):
                raise ValidationError(f"hole {i} touches or crosses the exterior")
            if point_in_ring(h[0], ext) != INSIDE:
                raise ValidationError(f"hole {i} is not inside the exterior")
            for k in range(i):
                other = holes[k]
                if not _rings_disjoint(h, other):
                    raise ValidationError(f"holes {k} and {i} intersect")
                if point_in_ring(h[0], other) != OUTSIDE or point_in_ring(other[0], h) != OUTSIDE:
                    raise ValidationError(f"holes {k} and {i} are nested")
        object.__setattr__(self, "exterior", ext)
        object.__setattr__(self, "holes", holes)

    @classmethod
    def from_vertices(cls, vertices: Sequence, holes: Sequence[Sequence] = ()) -> "Polygon":
        """Build from open vertex lists (the closing repeat is added here)."""

        def close(vs):
            vs = [tuple(v) for v in vs]
            return vs + [vs[0]] if vs[0] != vs[-1] else vs

        return cls(tuple(close(vertices)), tuple(tuple(close(h)) for h in holes))

    @property
    def rings(self) -> Tuple[Ring, ...]:
        return (self.exterior,) + self.holes

    @property
    def area(self) -> float:
        return math.fsum(signed_area(r) for r in self.rings)


@dataclass(frozen=True)
class MultiPolygon:
    polygons: Tuple[Polygon, ...]

    def __post_init__(self):
        polys = tuple(self.polygons)
        if not polys:
            raise ValidationError("multipolygon has no members")
        for p in polys:
            if not isinstance(p, Polygon):
                raise ValidationError("multipolygon members must be polygons")
        object.__setattr__(self, "polygons", polys)

    @property
    def area(self) -> float:
        return math.fsum(p.area for p in self.polygons)


Geometry = Union[Point, Polyline, Polygon, MultiPolygon]


@dataclass(frozen=True)
class BoundingBox:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        vals = (self.min_x, self.min_y, self.max_x, self.max_y)
        if not all(math.isfinite(v) for v in vals):
            raise DegenerateBBox("bounding box has non-finite bounds")
        if not (self.max_x > self.min_x and self.max_y > self.min_y):
            raise DegenerateBBox(f"bounding box has zero extent: {vals}")

    def contains(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y


def all_coords(g: Geometry) -> List[XY]:
    if isinstance(g, Point):
        return [g.xy]
    if isinstance(g, Polyline):
        return list(g.coords)
    if isinstance(g, Polygon):
        return [p for r in g.rings for p in r]
    if isinstance(g, MultiPolygon):
        return [p for pg in g.polygons for p in all_coords(pg)]
    raise UnsupportedGeometry(type(g).__name__)


def bounds(g: Geometry) -> Tuple[float, float, float, float]:
    """(min_x, min_y, max_x, max_y); may be degenerate, e.g. for a point."""
    xy = np.asarray(all_coords(g))
    return (xy[:, 0].min(), xy[:, 1].min(), xy[:, 0].max(), xy[:, 1].max())


def map_coords(g: Geometry, fn) -> Geometry:
    """Apply ``fn(x, y) -> (x, y)`` to every vertex, rebuilding and revalidating."""
    if isinstance(g, Point):
        return Point(*fn(g.x, g.y))
    if isinstance(g, Polyline):
        return Polyline(tuple(fn(x, y) for x, y in g.coords))
    if isinstance(g, Polygon):
        return Polygon(
            tuple(fn(x, y) for x, y in g.exterior),
            tuple(tuple(fn(x, y) for x, y in h) for h in g.holes),
        )
    if isinstance(g, MultiPolygon):
        return MultiPolygon(tuple(map_coords(p, fn) for p in g.polygons))
    raise UnsupportedGeometry(type(g).__name__)


def translate(g: Geometry, dx: float, dy: float) -> Geometry:
    return map_coords(g, lambda x, y: (x + dx, y + dy))


def normalize(g: Geometry, bbox: BoundingBox) -> Geometry:
    """Map ``bbox`` affinely onto [-1, 1] x [-1, 1], per axis."""
    if not isinstance(bbox, BoundingBox):
        bbox = BoundingBox(*bbox)
    sx = bbox.max_x - bbox.min_x
    sy = bbox.max_y - bbox.min_y

    def fn(x, y):
        return (2.0 * (x - bbox.min_x) / sx - 1.0, 2.0 * (y - bbox.min_y) / sy - 1.0)

    return map_coords(g, fn)


# --------------------------------------------------------------------- centroid


def _ring_moments(ring: Ring) -> Tuple[float, float, float]:
    """Signed area and first moments (Sx, Sy) of a closed ring."""
    a, mx, my = [], [], []
    for (x0, y0), (x1, y1) in zip(ring[:-1], ring[1:]):
        cross = x0 * y1 - x1 * y0
        a.append(cross)
        mx.append((x0 + x1) * cross)
        my.append((y0 + y1) * cross)
    return 0.5 * math.fsum(a), math.fsum(mx) / 6.0, math.fsum(my) / 6.0


def _polygon_moments(pg: Polygon) -> Tuple[float, float, float]:
    # holes are clockwise, so their signed moments subtract automatically
    parts = [_ring_moments(r) for r in pg.rings]
    return (
        math.fsum(p[0] for p in parts),
        math.fsum(p[1] for p in parts),
        math.fsum(p[2] for p in parts),
    )


def centroid(g: Geometry) -> Point:
    """Point: itself. Polyline: length-weighted segment midpoints.
    Polygon / MultiPolygon: area centroid (holes subtracted)."""
    if isinstance(g, Point):
        return g
    if isinstance(g, Polyline):
        w, sx, sy = [], [], []
        for (x0, y0), (x1, y1) in zip(g.coords[:-1], g.coords[1:]):
            length = math.hypot(x1 - x0, y1 - y0)
            w.append(length)
            sx.append(length * 0.5 * (x0 + x1))
            sy.append(length * 0.5 * (y0 + y1))
        total = math.fsum(w)
        return Point(math.fsum(sx) / total, math.fsum(sy) / total)
    if isinstance(g, (Polygon, MultiPolygon)):
        polys = g.polygons if isinstance(g, MultiPolygon) else (g,)
        parts = [_polygon_moments(p) for p in polys]
        area = math.fsum(p[0] for p in parts)
        return Point(math.fsum(p[1] for p in parts) / area, math.fsum(p[2] for p in parts) / area)
    raise UnsupportedGeometry(type(g).__name__)


# ------------------------------------------------------------------------ WKT

_WKT_TOKEN = re.compile(r"\s*(?:(\()|(\))|(,)|([A-Za-z]+)|([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))")
_UNSUPPORTED_WKT = {
    "GEOMETRYCOLLECTION",
    "MULTIPOINT",
    "MULTILINESTRING",
    "TRIANGLE",
    "TIN",
    "POLYHEDRALSURFACE",
    "CIRCULARSTRING",
    "COMPOUNDCURVE",
    "CURVEPOLYGON",
    "MULTISURFACE",
    "MULTICURVE",
}


class _WktReader:
    def __init__(self, text: str):
        self.tokens = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _WKT_TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"unexpected character at offset {pos}: {text[pos:pos + 10]!r}")
            pos = m.end()
            lp, rp, comma, word, num = m.groups()
            if lp:
                self.tokens.append("(")
            elif rp:
                self.tokens.append(")")
            elif comma:
                self.tokens.append(",")
            elif word:
                self.tokens.append(word.upper())
            else:
                self.tokens.append(float(num))
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, expected=None):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of WKT")
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, got {tok!r}")
        self.i += 1
        return tok

    def coord(self) -> XY:
        vals = []
        while isinstance(self.peek(), float):
            vals.append(self.take())
        if len(vals) != 2:
            raise ParseError(f"expected 2 ordinates, got {len(vals)}")
        return (vals[0], vals[1])

    def coord_list(self) -> List[XY]:
        self.take("(")
        out = [self.coord()]
        while self.peek() == ",":
            self.take(",")
            out.append(self.coord())
        self.take(")")
        return out

    def ring_list(self) -> List[List[XY]]:
        self.take("(")
        out = [self.coord_list()]
        while self.peek() == ",":
            self.take(",")
            out.append(self.coord_list())
        self.take(")")
        return out


def _parse_wkt(text: str) -> Geometry:
    r = _WktReader(text)
    tag = r.take()
    if not isinstance(tag, str) or tag in "(),":
        raise ParseError("WKT must start with a geometry type")
    if tag in _UNSUPPORTED_WKT:
        raise UnsupportedGeometry(tag)
    if r.peek() in ("Z", "M", "ZM"):
        raise UnsupportedGeometry(f"{tag} {r.peek()} (only 2D geometries are supported)")
    if r.peek() == "EMPTY":
        raise ValidationError(f"{tag} EMPTY")
    if tag == "POINT":
        r.take("(")
        xy = r.coord()
        r.take(")")
        g: Geometry = Point(*xy)
    elif tag == "LINESTRING":
        g = Polyline(tuple(r.coord_list()))
    elif tag == "POLYGON":
        rings = r.ring_list()
        g = Polygon(tuple(rings[0]), tuple(tuple(h) for h in rings[1:]))
    elif tag == "MULTIPOLYGON":
        r.take("(")
        polys = [r.ring_list()]
        while r.peek() == ",":
            r.take(",")
            polys.append(r.ring_list())
        r.take(")")
        g = MultiPolygon(tuple(Polygon(tuple(p[0]), tuple(tuple(h) for h in p[1:])) for p in polys))
    else:
        raise ParseError(f"unknown WKT geometry type {tag!r}")
    if r.peek() is not None:
        raise ParseError(f"trailing tokens after geometry: {r.peek()!r}")
    return g


def _fmt(v: float) -> str:
    return repr(float(v))


def _wkt_coords(cs) -> str:
    return "(" + ", ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in cs) + ")"


def to_wkt(g: Geometry) -> str:
    if isinstance(g, Point):
        return f"POINT ({_fmt(g.x)} {_fmt(g.y)})"
    if isinstance(g, Polyline):
        return "LINESTRING " + _wkt_coords(g.coords)
    if isinstance(g, Polygon):
        return "POLYGON (" + ", ".join(_wkt_coords(r) for r in g.rings) + ")"
    if isinstance(g, MultiPolygon):
        return (
            "MULTIPOLYGON ("
            + ", ".join("(" + ", ".join(_wkt_coords(r) for r in p.rings) + ")" for p in g.polygons)
            + ")"
        )
    raise UnsupportedGeometry(type(g).__name__)


# -------------------------------------------------------------------- GeoJSON


def from_geojson(obj) -> Geometry:
    """Build a geometry from a decoded GeoJSON object (Geometry or Feature)."""
    if not isinstance(obj, dict):
        raise ParseError("GeoJSON geometry must be an object")
    kind = obj.get("type")
    if kind == "Feature":
        return from_geojson(obj.get("geometry"))
    coords = obj.get("coordinates")
    if kind in ("GeometryCollection", "MultiPoint", "MultiLineString", "FeatureCollection"):
        raise UnsupportedGeometry(kind)
    if coords is None:
        raise ParseError(f"GeoJSON object of type {kind!r} has no coordinates")

    def xy_list(cs):
        out = []
        for c in cs:
            if not isinstance(c, (list, tuple)) or len(c) < 2:
                raise ParseError(f"bad position {c!r}")
            if len(c) > 2:
                raise UnsupportedGeometry("only 2D positions are supported")
            out.append((float(c[0]), float(c[1])))
        return tuple(out)

    try:
        if kind == "Point":
            (x, y) = xy_list([coords])[0]
            return Point(x, y)
        if kind == "LineString":
            return Polyline(xy_list(coords))
        if kind == "Polygon":
            if not coords:
                raise ValidationError("polygon has no rings")
            return Polygon(xy_list(coords[0]), tuple(xy_list(h) for h in coords[1:]))
        if kind == "MultiPolygon":
            return MultiPolygon(
                tuple(Polygon(xy_list(p[0]), tuple(xy_list(h) for h in p[1:])) for p in coords)
            )
    except (TypeError, IndexError) as exc:
        raise ParseError(f"malformed {kind} coordinates") from exc
    raise ParseError(f"unknown GeoJSON type {kind!r}")


def to_geojson(g: Geometry) -> dict:
    if isinstance(g, Point):
        return {"type": "Point", "coordinates": [g.x, g.y]}
    if isinstance(g, Polyline):
        return {"type": "LineString", "coordinates": [list(c) for c in g.coords]}
    if isinstance(g, Polygon):
        return {"type": "Polygon", "coordinates": [[list(c) for c in r] for r in g.rings]}
    if isinstance(g, MultiPolygon):
        return {
            "type": "MultiPolygon",
            "coordinates": [[[list(c) for c in r] for r in p.rings] for p in g.polygons],
        }
    raise UnsupportedGeometry(type(g).__name__)


def parse_geometry(text: str, format: str = "wkt") -> Geometry:
    """Parse WKT or GeoJSON text into a validated, orientation-canonical geometry."""
    fmt = format.lower()
    if fmt == "wkt":
        return _parse_wkt(text)
    if fmt == "geojson":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        return from_geojson(obj)
    raise ParseError(f"unknown format {format!r}")


def serialize(g: Geometry, format: str = "wkt") -> str:
    if format.lower() == "wkt":
        return to_wkt(g)
    if format.lower() == "geojson":
        return json.dumps(to_geojson(g))
    raise ParseError(f"unknown format {format!r}")


def warn_short_segments(pl: Polyline) -> int:
    """Count (and warn about) segments at or below the length floor."""
    n = sum(
        1
        for a, b in zip(pl.coords[:-1], pl.coords[1:])
        if math.hypot(b[0] - a[0], b[1] - a[1]) <= MIN_SEGMENT_LENGTH
    )
    if n:
        warnings.warn(f"dropping {n} degenerate polyline segment(s)", stacklevel=3)
    return n


__all__ = [
    "BOUNDARY",
    "BoundingBox",
    "Geometry",
    "MultiPolygon",
    "Point",
    "Point2",
    "Polygon",
    "Polyline",
    "all_coords",
    "bounds",
    "centroid",
    "from_geojson",
    "map_coords",
    "normalize",
    "parse_geometry",
    "serialize",
    "signed_area",
    "to_geojson",
    "to_wkt",
    "translate",
]
