import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geofourier.errors import DegenerateSegment, GeoFourierError, DegenerateTriangle, InvalidRange, TooFew
from geofourier.frequency_grid import build_grid, default_grid, geometric_frequencies
from geofourier.geometry import MultiPolygon, Point, Polygon, Polyline, translate
from geofourier.oracle import quad_triangles
from geofourier.spectral import (
    ComplexSpectrum,
    cft_canonical_triangle,
    cft_point,
    cft_polygon,
    cft_polyline,
    cft_segment,
    cft_triangle,
    encode_spectrum,
    special_case_antidiagonal,
    special_case_u0,
    special_case_v0,
    spectrum_values_from_bytes,
    transform,
)
from geofourier.triangulation import Segment, Triangle, fan_triangulate, triangulate

GRID = default_grid()
PENTAGON = Polygon.from_vertices([(0, 0), (1, 0), (1.3, 0.7), (0.5, 1.2), (-0.2, 0.6)])

# canonical-triangle integrals, 30-digit mpmath double quadrature (frozen)
CANONICAL_REF = {
    (0.37, 0.61): complex(-0.18872248905434727465, -0.087122785989673215233),
    (0.0, 0.5): complex(0.20264236728467554289, -0.31830988618379067154),
    (0.5, 0.0): complex(-0.20264236728467554289, -0.31830988618379067154),
    (-0.5, 0.5): complex(0.20264236728467554289, 0.31830988618379067154),
    (1e-9, 0.5): complex(0.20264236587939080713, -0.31830988682041044054),
}


# ------------------------------------------------------------------- grid


def test_geometric_frequencies_defaults():
    f = geometric_frequencies(0.1, 1.0, 10)
    assert f[0] == 0.1 and f[-1] == 1.0
    ratio = f[1:] / f[:-1]
    assert np.allclose(ratio, 1.2915496650148839, rtol=1e-12, atol=0)
    assert list(geometric_frequencies(1.0, 1.0001, 2)) == [1.0, 1.0001]


@pytest.mark.parametrize("args, exc", [((1.0, 0.5, 4), InvalidRange), ((0.0, 1.0, 4), InvalidRange), ((0.1, 1.0, 1), TooFew)])
def test_geometric_frequencies_errors(args, exc):
    with pytest.raises(exc):
        geometric_frequencies(*args)


def test_default_grid_layout():
    assert len(GRID) == 210
    assert np.all(GRID.u > 0)
    pairs = set(zip(GRID.u.tolist(), GRID.v.tolist()))
    assert len(pairs) == 210
    assert not any((-u, -v) in pairs for u, v in pairs)


def test_small_grid_enumeration():
    g = build_grid([1.0, 2.0])
    pairs = list(zip(g.u.tolist(), g.v.tolist()))
    assert len(pairs) == 10
    assert (1.0, -2.0) in pairs and (1.0, 0.0) in pairs and (2.0, 2.0) in pairs
    assert all(u > 0 for u, _ in pairs)
    # u-major ordering
    assert pairs[:5] == [(1.0, -2.0), (1.0, -1.0), (1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]


def test_grid_determinism_and_csv():
    assert default_grid().grid_id == GRID.grid_id
    assert default_grid().to_csv() == GRID.to_csv()
    assert GRID.to_csv().splitlines()[0] == "u,v"
    assert len(default_grid(mode="full")) == 21 * 21


# ------------------------------------------------------------------ points


def test_point_examples():
    assert np.all(cft_point(Point(0, 0), GRID).values == 1)
    g = build_grid([1.0])
    vals = cft_point(Point(0.5, 0), g).values
    assert abs(vals[list(zip(g.u, g.v)).index((1.0, 0.0))] - (-1)) < 1e-15


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_point_magnitude_is_one(x, y):
    assert np.max(np.abs(np.abs(cft_point(Point(x, y), GRID).values) - 1.0)) <= 1e-15


# ---------------------------------------------------------------- segments


def test_segment_examples():
    u = np.linspace(-3, 3, 61)
    assert np.allclose(transform(Polyline(((-0.5, 0), (0.5, 0))), u, 0 * u), np.sinc(u), atol=1e-15, rtol=0)
    assert complex(transform(Polyline(((0, 0), (0.6, 0.8))), 0.0, 0.0)) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DegenerateSegment):
        cft_segment(((0.0, 0.0), (0.0, 0.0)), GRID)


def test_polyline_is_sum_of_segments():
    pl = Polyline(((0, 0), (0.4, 0.3), (0.9, -0.2)))
    one = cft_polyline(Polyline(((0, 0), (0.4, 0.3))), GRID)
    seg = Segment(Point(0, 0), Point(0.4, 0.3))
    assert np.array_equal(one.values, cft_segment(seg, GRID).values)
    total = cft_segment(((0, 0), (0.4, 0.3)), GRID) + cft_segment(((0.4, 0.3), (0.9, -0.2)), GRID)
    assert np.allclose(cft_polyline(pl, GRID).values, total.values, atol=1e-15, rtol=0)


def test_symmetric_chevron_real_on_v_zero():
    vals = cft_polyline(Polyline(((-1, 0), (0, 1), (1, 0))), GRID).values
    # odd-in-x part cancels at v = 0 for a mirror-symmetric shape
    assert np.max(np.abs(vals[GRID.v == 0].imag)) <= 1e-14


# ---------------------------------------------------------------- triangles


def test_canonical_triangle_origin():
    assert cft_canonical_triangle(0.0, 0.0) == 0.5


@pytest.mark.parametrize("uv", sorted(CANONICAL_REF))
def test_canonical_triangle_against_frozen_reference(uv):
    got = complex(cft_canonical_triangle(*uv))
    ref = CANONICAL_REF[uv]
    assert abs(got - ref) / (1 + abs(ref)) <= 1e-12


def test_special_case_formulas_agree_with_limits():
    v = np.linspace(-2, 2, 41)
    v = v[np.abs(v) > 1e-3]
    assert np.max(np.abs(special_case_u0(v) - cft_canonical_triangle(0.0 * v, v))) <= 1e-15
    assert np.max(np.abs(special_case_v0(v) - cft_canonical_triangle(v, 0.0 * v))) <= 1e-15
    assert np.max(np.abs(special_case_antidiagonal(v) - cft_canonical_triangle(-v, v))) <= 1e-13


def test_branch_continuity():
    assert abs(cft_canonical_triangle(1e-9, 0.5) - cft_canonical_triangle(0.0, 0.5)) < 1e-6
    # just either side of the switching threshold, against brute-force cubature
    canon = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    pts = []
    for eps in (0.999e-6, 1.001e-6):
        pts += [(eps, 0.3), (0.3, eps), (0.3 + eps, -0.3), (eps, eps), (-0.7, 0.7 - eps)]
    u, v = np.array(pts).T
    ref = quad_triangles(canon, u, v, tol=1e-11)[0]
    assert np.max(np.abs(cft_canonical_triangle(u, v) - ref)) <= 1e-9


@pytest.mark.parametrize("radius", [1e-8, 1e-6, 1e-4, 1e-2, 0.2, 0.3, 1.0, 3.0])
def test_canonical_triangle_radial_sweep(radius):
    # no accuracy hole between the origin series, the line branches and the closed form
    canon = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    ang = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    u = np.r_[radius * np.cos(ang), radius, radius * 1e-3, -radius]
    v = np.r_[radius * np.sin(ang), radius * 1e-3, radius, radius * (1 + 1e-4)]
    ref = quad_triangles(canon, u, v, tol=1e-11)[0]
    assert np.max(np.abs(cft_canonical_triangle(u, v) - ref)) <= 1e-11


def test_triangle_examples():
    canon = Triangle.from_xy((0, 0), (1, 0), (1, 1))
    assert np.allclose(cft_triangle(canon, GRID).values, cft_canonical_triangle(GRID.u, GRID.v), atol=1e-15, rtol=0)
    big = Triangle.from_xy((0, 0), (2, 0), (0, 2))
    assert complex(transform(Polygon.from_vertices([(0, 0), (2, 0), (0, 2)]), 0.0, 0.0)) == pytest.approx(2.0, rel=1e-15)
    assert big.area == 2.0
    with pytest.raises(DegenerateTriangle):
        cft_triangle([(0, 0), (1, 1), (2, 2)], GRID)


# ----------------------------------------------------------------- polygons


def test_unit_square_closed_form():
    sq = Polygon.from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
    expected = np.exp(-1j * np.pi * (GRID.u + GRID.v)) * np.sinc(GRID.u) * np.sinc(GRID.v)
    assert np.max(np.abs(cft_polygon(sq, GRID).values - expected)) <= 1e-9
    assert complex(transform(sq, 0.0, 0.0)) == pytest.approx(1.0, rel=1e-15)


def test_pentagon_triangulation_invariance():
    a = cft_polygon(PENTAGON, GRID, triangulate(PENTAGON, "cdt")).values
    b = cft_polygon(PENTAGON, GRID, triangulate(PENTAGON, "ear")).values
    verts = PENTAGON.exterior[:-1]
    for apex in range(len(verts)):
        c = cft_polygon(PENTAGON, GRID, fan_triangulate(verts, apex)).values
        assert np.max(np.abs(a - c)) <= 1e-9
    assert np.max(np.abs(a - b)) <= 1e-9


def test_encode_spectrum_dispatch():
    assert np.all(np.abs(np.abs(encode_spectrum(Point(0.2, -0.4), GRID).values) - 1) <= 1e-15)
    assert np.array_equal(encode_spectrum(PENTAGON, GRID).values, cft_polygon(PENTAGON, GRID).values)
    sq = lambda x: Polygon.from_vertices([(x, 0), (x + 1, 0), (x + 1, 1), (x, 1)])
    mp = MultiPolygon((sq(0), sq(3)))
    assert complex(transform(mp, 0.0, 0.0)) == pytest.approx(2.0, rel=1e-15)
    assert np.allclose(encode_spectrum(mp, GRID).values, (cft_polygon(sq(0), GRID) + cft_polygon(sq(3), GRID)).values,
                       atol=1e-15, rtol=0)


def test_holed_polygon_is_difference():
    outer = Polygon.from_vertices([(0, 0), (3, 0), (3, 3), (0, 3)])
    hole = [(1, 1), (2, 1), (2, 2), (1, 2)]
    holed = Polygon.from_vertices(outer.exterior[:-1], holes=[hole])
    diff = cft_polygon(outer, GRID).values - cft_polygon(Polygon.from_vertices(hole), GRID).values
    assert np.max(np.abs(cft_polygon(holed, GRID).values - diff)) <= 1e-12


# ----------------------------------------------------------------- laws


def star(seed):
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(0.5, 1.5, 7)
    angles = np.cumsum(gaps) / gaps.sum() * 2 * np.pi
    radii = rng.uniform(0.3, 1.0, 7)
    return Polygon.from_vertices([(r * math.cos(a), r * math.sin(a)) for a, r in zip(angles, radii)])


polygons = st.integers(0, 10_000).map(star)


@settings(max_examples=30, deadline=None)
@given(polygons, st.floats(-2, 2), st.floats(-2, 2))
def test_hermitian_and_translation(pg, tx, ty):
    full = default_grid(mode="full")
    f = transform(pg, full.u, full.v)
    assert np.max(np.abs(transform(pg, -full.u, -full.v) - np.conj(f))) <= 1e-12
    g = transform(translate(pg, tx, ty), full.u, full.v)
    assert np.max(np.abs(np.abs(g) - np.abs(f))) <= 1e-10
    ramp = np.exp(-2j * np.pi * (tx * full.u + ty * full.v))
    assert np.max(np.abs(g - ramp * f)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.lists(st.floats(-1.5, 1.5), min_size=6, max_size=6))
def test_affine_law_on_triangles(xy, m):
    t = np.array(xy).reshape(3, 2)
    (ax, ay), (bx, by) = t[1] - t[0], t[2] - t[0]
    if abs(ax * by - ay * bx) < 1e-2:
        return
    a = np.array(m[:4]).reshape(2, 2)
    if abs(np.linalg.det(a)) < 0.1:
        return
    tau = np.array(m[4:])
    image = t @ a.T + tau
    lhs = transform(Polygon.from_vertices([tuple(p) for p in image]), GRID.u, GRID.v)
    au = a[0, 0] * GRID.u + a[1, 0] * GRID.v
    av = a[0, 1] * GRID.u + a[1, 1] * GRID.v
    rhs = abs(np.linalg.det(a)) * np.exp(-2j * np.pi * (tau[0] * GRID.u + tau[1] * GRID.v)) * transform(
        Polygon.from_vertices([tuple(p) for p in t]), au, av)
    assert np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs))) <= 1e-8


# --------------------------------------------------------------- exports


def test_spectrum_exports_round_trip():
    spec = cft_polygon(PENTAGON, GRID)
    assert np.array_equal(spectrum_values_from_bytes(spec.to_bytes()), spec.values)
    blob = spec.to_bytes()
    assert blob[:4] == b"P2VS" and len(blob) == 12 + 16 * 210
    lines = spec.to_csv().splitlines()
    assert lines[0] == "index,u,v,re,im" and len(lines) == 211
    with pytest.raises(GeoFourierError):
        ComplexSpectrum(np.zeros(3), GRID)
