import numpy as np
import pytest

from geofourier.geometry import Polygon
from geofourier.oracle import quad_polygon, quad_segment, quad_triangle, quad_triangles
from geofourier.triangulation import Triangle

CANON = Triangle.from_xy((0, 0), (1, 0), (1, 1))


def test_canonical_triangle_area_at_origin():
    assert abs(quad_triangle(CANON, 0.0, 0.0) - 0.5) <= 1e-14


def test_known_value_independent_of_closed_form():
    # 2/pi^2 - j/pi, from 30-digit double quadrature
    ref = complex(0.20264236728467554289, -0.31830988618379067154)
    assert abs(quad_triangle(CANON, 0.0, 0.5) - ref) <= 1e-10


def test_segment_at_origin_is_length():
    assert quad_segment(((0, 0), (3, 4)), 0.0, 0.0) == pytest.approx(5.0, rel=1e-14)


def test_segment_matches_sinc():
    u = np.linspace(-3, 3, 13)
    got = quad_segment(((-0.5, 0.0), (0.5, 0.0)), u, 0 * u, n=128)
    assert np.max(np.abs(got - np.sinc(u))) <= 1e-12


@pytest.mark.parametrize("tol", [0.0, 1e-13, 1e-3, 1.0])
def test_tolerance_bounds(tol):
    with pytest.raises(ValueError):
        quad_triangle(CANON, 0.1, 0.2, tol=tol)


def test_quad_segment_needs_enough_nodes():
    with pytest.raises(ValueError):
        quad_segment(((0, 0), (1, 0)), 0.1, 0.1, n=8)


def test_partition_independence():
    sq = Polygon.from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
    u = np.array([0.3, 1.7, -0.9])
    v = np.array([0.1, -0.4, 2.2])
    a = quad_polygon(sq, u, v, method="ear")
    b = quad_polygon(sq, u, v, method="cdt")
    exact = np.exp(-1j * np.pi * (u + v)) * np.sinc(u) * np.sinc(v)
    assert np.max(np.abs(a - exact)) <= 1e-10
    assert np.max(np.abs(b - exact)) <= 1e-10


def test_error_estimate_is_small_and_vectorized():
    tris = np.array([[[0, 0], [1, 0], [0, 1]], [[1, 0], [1, 1], [0, 1]]], dtype=float)
    val, err = quad_triangles(tris, np.array([0.5, 2.0]), np.array([0.25, -1.0]), tol=1e-10)
    assert val.shape == (2,) and np.all(err < 1e-9)
