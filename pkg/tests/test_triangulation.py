import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geofourier.errors import ValidationError
from geofourier.geometry import MultiPolygon, Polygon, Polyline, signed_area
from geofourier.predicates import BOUNDARY, INSIDE, OUTSIDE, incircle, orient2d, point_in_ring, segments_intersect
from geofourier.triangulation import Triangle, fan_triangulate, split_polyline, triangulate, triangulation_geojson

L_HEXAGON = Polygon.from_vertices([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])


def star_polygon(rng, n, holes=False):
    gaps = rng.uniform(0.5, 1.5, size=n)
    angles = rng.uniform(0, 2 * np.pi) + np.cumsum(gaps) / gaps.sum() * 2 * np.pi
    radii = rng.uniform(0.3, 1.0, size=n)
    verts = [(r * math.cos(a), r * math.sin(a)) for a, r in zip(angles, radii)]
    hole = []
    if holes:
        s = 0.25 * radii.min()
        hole = [[(s * math.cos(t), s * math.sin(t)) for t in np.linspace(0, 2 * np.pi, 6, endpoint=False)]]
    return Polygon.from_vertices(verts, holes=hole)


# -------------------------------------------------------------- predicates


def test_orient2d_exact_on_near_collinear():
    a, b = (0.0, 0.0), (1.0, 1.0)
    assert orient2d(a, b, (0.5, 0.5)) == 0
    c = (0.5, 0.5 + 2.0**-53)
    assert orient2d(a, b, c) > 0
    assert orient2d(a, b, (0.5, 0.5 - 2.0**-54)) < 0
    # a classic failure case for naive evaluation
    p, q = (0.5, 0.5), (12.0, 12.0)
    r = (24.0, 24.0 + 2.0**-48)
    assert orient2d(p, q, r) > 0


def test_incircle_signs():
    a, b, c = (0.0, 0.0), (1.0, 0.0), (0.0, 1.0)
    assert incircle(a, b, c, (0.5, 0.5)) > 0
    assert incircle(a, b, c, (1.0, 1.0)) == 0
    assert incircle(a, b, c, (2.0, 2.0)) < 0


def test_point_in_ring_classes():
    ring = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]
    assert point_in_ring((0.5, 0.5), ring) == INSIDE
    assert point_in_ring((1.0, 0.3), ring) == BOUNDARY
    assert point_in_ring((0.0, 0.0), ring) == BOUNDARY
    assert point_in_ring((1.5, 0.5), ring) == OUTSIDE


def test_segments_intersect_closed():
    assert segments_intersect((0, 0), (1, 0), (1, 0), (2, 1))
    assert segments_intersect((0, 0), (2, 0), (1, 0), (3, 0))
    assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))


# --------------------------------------------------------------- polylines


def test_split_polyline_examples():
    segs = split_polyline(Polyline(((0, 0), (1, 0), (1, 1))))
    assert [(s.q.xy, s.r.xy) for s in segs] == [((0, 0), (1, 0)), ((1, 0), (1, 1))]
    assert len(split_polyline(Polyline(((0, 0), (3, 4))))) == 1
    with pytest.warns(UserWarning):
        segs = split_polyline(Polyline(((0, 0), (0, 0), (1, 0))))
    assert [(s.q.xy, s.r.xy) for s in segs] == [((0, 0), (1, 0))]


def test_all_degenerate_polyline_never_reaches_split():
    # the constructor already refuses a polyline with no segment above the floor
    with pytest.raises(ValidationError):
        Polyline(((0, 0), (1e-13, 0)))


# ---------------------------------------------------------------- polygons


@pytest.mark.parametrize("method", ["cdt", "ear"])
def test_square_and_pentagon(method):
    sq = Polygon.from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
    tris = triangulate(sq, method)
    assert len(tris) == 2 and sum(t.area for t in tris) == 1.0
    pent = Polygon.from_vertices([(math.cos(a), math.sin(a)) for a in np.linspace(0, 2 * np.pi, 5, endpoint=False)])
    tris = triangulate(pent, method)
    assert len(tris) == 3
    assert math.isclose(sum(t.area for t in tris), pent.area, rel_tol=1e-12)


@pytest.mark.parametrize("method", ["cdt", "ear"])
def test_l_hexagon_monte_carlo_containment(method):
    tris = triangulate(L_HEXAGON, method)
    assert len(tris) == 4
    rng = np.random.default_rng(0)
    ring = L_HEXAGON.exterior
    for t in tris:
        q, r, s = (np.array(p.xy) for p in (t.q, t.r, t.s))
        a, b = rng.uniform(size=(2, 2500))
        flip = a + b > 1
        a[flip], b[flip] = 1 - a[flip], 1 - b[flip]
        pts = q + np.outer(a, r - q) + np.outer(b, s - q)
        assert all(point_in_ring(tuple(p), ring) != OUTSIDE for p in pts)


def _interiors_overlap(t1: Triangle, t2: Triangle) -> bool:
    """Separating-axis test with exact orientations (shared edges do not count)."""
    a = [p.xy for p in (t1.q, t1.r, t1.s)]
    b = [p.xy for p in (t2.q, t2.r, t2.s)]
    for tri, other in ((a, b), (b, a)):
        for i in range(3):
            p, q = tri[i], tri[(i + 1) % 3]
            # CCW triangle: interior is to the left; separated if all of other is on or right
            if all(orient2d(p, q, o) <= 0 for o in other):
                return False
    return True


@pytest.mark.parametrize("method", ["cdt", "ear"])
def test_area_conservation_and_non_overlap_random(method):
    rng = np.random.default_rng(1)
    for k in range(200):
        pg = star_polygon(rng, int(rng.integers(4, 30)), holes=k % 4 == 0)
        tris = triangulate(pg, method)
        total = math.fsum(t.area for t in tris)
        assert abs(total - pg.area) / pg.area <= 1e-9
        verts = {p for r in pg.rings for p in r}
        assert all(p.xy in verts for t in tris for p in (t.q, t.r, t.s))
        if k % 20 == 0:
            for i in range(len(tris)):
                for j in range(i + 1, len(tris)):
                    assert not _interiors_overlap(tris[i], tris[j])


def test_constrained_edges_present():
    rng = np.random.default_rng(2)
    pg = star_polygon(rng, 15)
    tris = triangulate(pg, "cdt")
    edges = {frozenset((a.xy, b.xy)) for t in tris for a, b in ((t.q, t.r), (t.r, t.s), (t.s, t.q))}
    ring = pg.exterior
    assert all(frozenset((ring[i], ring[i + 1])) in edges for i in range(len(ring) - 1))


def test_cdt_is_locally_delaunay_on_convex_input():
    rng = np.random.default_rng(3)
    pts = [(math.cos(a), math.sin(a) * 0.5) for a in np.sort(rng.uniform(0, 2 * np.pi, 12))]
    tris = triangulate(Polygon.from_vertices(pts), "cdt")
    for t in tris:
        a, b, c = t.q.xy, t.r.xy, t.s.xy
        for p in pts:
            if p not in (a, b, c):
                assert incircle(a, b, c, p) <= 0


def test_holes_and_multipolygon_area():
    holed = Polygon.from_vertices(
        [(0, 0), (4, 0), (4, 4), (0, 4)],
        holes=[[(0.5, 0.5), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5)], [(2, 2), (3.5, 2), (3, 3.25)]],
    )
    for method in ("cdt", "ear"):
        assert math.isclose(sum(t.area for t in triangulate(holed, method)), 14.0625, rel_tol=1e-12)
    mp = MultiPolygon((holed, Polygon.from_vertices([(5, 5), (6, 5), (6, 6)])))
    assert math.isclose(sum(t.area for t in triangulate(mp)), 14.5625, rel_tol=1e-12)


def test_collinear_vertices_are_skipped():
    pg = Polygon.from_vertices([(0, 0), (1, 0), (2, 0), (2, 2), (0, 2)])
    tris = triangulate(pg)
    assert all(t.area > 0 for t in tris)
    assert math.isclose(sum(t.area for t in tris), 4.0)


def test_fan_and_geojson_dump():
    fan = fan_triangulate([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert len(fan) == 2
    dump = triangulation_geojson(fan)
    assert dump["type"] == "MultiPolygon" and len(dump["coordinates"]) == 2


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_triangle_stored_ccw(w, h):
    t = Triangle.from_xy((0, 0), (0, h), (w, 0))
    ring = [t.q.xy, t.r.xy, t.s.xy, t.q.xy]
    assert signed_area(ring) > 0
