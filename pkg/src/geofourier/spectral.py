"""Closed-form 2D continuous Fourier transforms of points, segments and triangles.

Transform convention: F(u, v) = integral of f(x, y) exp(-j 2 pi (u x + v y)).
Polylines and polygons are assembled by linearity from their segments and
triangles. Off-grid evaluation goes through the ``*_transform`` functions,
which accept broadcastable ``u`` and ``v`` arrays; the ``cft_*`` functions
evaluate on a ``FrequencyGrid`` and wrap the result in a ``ComplexSpectrum``.
"""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateSegment, DegenerateTriangle, GeoFourierError, UnsupportedGeometry
from .frequency_grid import FrequencyGrid
from .geometry import Geometry, MultiPolygon, Point, Polygon, Polyline
from .triangulation import (
    MIN_TRIANGLE_AREA,
    Segment,
    Triangle,
    split_polyline,
    triangles_as_array,
    triangulate,
)

TWO_PI = 2.0 * np.pi

# |u|, |v| or |u + v| at or below this switches the canonical triangle to a
# rearranged expression that stays finite on that line.
EPS_SING = 1e-6
# below this |u|, |v| the series is used; (2 pi r)^n / n! < 1e-18 by n = 30
SERIES_RADIUS = 0.25
SERIES_TERMS = 30
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(SERIES_TERMS // 2)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS
_SERIES_COEF = [1.0 / (math.factorial(n) * (n + 2)) for n in range(SERIES_TERMS)]

SPECTRUM_MAGIC = b"P2VS"
SPECTRUM_VERSION = 1


def sinc(t):
    """Normalized sinc, sin(pi t) / (pi t), with sinc(0) = 1."""
    return np.sinc(t)


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    values: np.ndarray
    grid: FrequencyGrid

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (len(self.grid),):
            raise GeoFourierError(
                f"spectrum has {vals.shape} values for a grid of {len(self.grid)} samples"
            )
        if not np.all(np.isfinite(vals)):
            raise GeoFourierError("spectrum contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def grid_id(self) -> str:
        return self.grid.grid_id

    def __len__(self) -> int:
        return len(self.values)

    def __add__(self, other: "ComplexSpectrum") -> "ComplexSpectrum":
        if other.grid != self.grid:
            raise GeoFourierError("cannot add spectra on different grids")
        return ComplexSpectrum(self.values + other.values, self.grid)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,u,v,re,im\n")
        for i, (u, v, z) in enumerate(zip(self.grid.u, self.grid.v, self.values)):
            buf.write(f"{i},{u!r},{v!r},{z.real!r},{z.imag!r}\n")
        return buf.getvalue()

    def to_bytes(self) -> bytes:
        """Little-endian: magic, version u32, count u32, then (re, im) f64 pairs."""
        head = SPECTRUM_MAGIC + struct.pack("<II", SPECTRUM_VERSION, len(self.values))
        body = np.stack([self.values.real, self.values.imag], axis=1).astype("<f8").tobytes()
        return head + body


def spectrum_values_from_bytes(data: bytes) -> np.ndarray:
    """Decode the binary layout written by ``ComplexSpectrum.to_bytes``."""
    if data[:4] != SPECTRUM_MAGIC:
        raise GeoFourierError("not a spectrum file (bad magic)")
    version, count = struct.unpack("<II", data[4:12])
    if version != SPECTRUM_VERSION:
        raise GeoFourierError(f"unsupported spectrum version {version}")
    pairs = np.frombuffer(data[12 : 12 + 16 * count], dtype="<f8").reshape(count, 2)
    return pairs[:, 0] + 1j * pairs[:, 1]


# ------------------------------------------------------------------ primitives


def point_transform(x: float, y: float, u, v) -> np.ndarray:
    """exp(-j 2 pi (x u + y v)): a unit-magnitude phase ramp."""
    theta = TWO_PI * (x * np.asarray(u, dtype=float) + y * np.asarray(v, dtype=float))
    return np.cos(theta) - 1j * np.sin(theta)


def segment_transform(q, r, u, v) -> np.ndarray:
    """L^2 * exp(-j 2 pi m.u) * sinc((r - q).u) for the segment q-r.

    The L^2 prefactor makes the value at the origin the squared length.
    """
    (xq, yq), (xr, yr) = q, r
    dx, dy = xr - xq, yr - yq
    l2 = dx * dx + dy * dy
    if l2 <= 0:
        raise DegenerateSegment("segment endpoints coincide")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    mx, my = 0.5 * (xq + xr), 0.5 * (yq + yr)
    return l2 * point_transform(mx, my, u, v) * sinc(dx * u + dy * v)


def _unit_interval_transform(a):
    """E(a) = integral_0^1 exp(-j 2 pi a x) dx = exp(-j pi a) sinc(a)."""
    return np.exp(-1j * np.pi * a) * sinc(a)


def canonical_triangle_general(u, v):
    """Closed form on the canonical triangle {0 <= x <= 1, 0 <= y <= x}.

    Undefined when u, v or u + v is zero.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = u + v
    re = w * np.cos(TWO_PI * u) - u * np.cos(TWO_PI * w) - v
    im = -(w * np.sin(TWO_PI * u) - u * np.sin(TWO_PI * w))
    return (re + 1j * im) / (4.0 * np.pi**2 * u * v * w)


def special_case_u0(v):
    """Limit of the canonical closed form on the line u = 0."""
    v = np.asarray(v, dtype=float)
    t = TWO_PI * v
    return -(1j * t + np.cos(t) - 1j * np.sin(t) - 1.0) / (4.0 * np.pi**2 * v**2)


def special_case_v0(u):
    """Limit of the canonical closed form on the line v = 0."""
    u = np.asarray(u, dtype=float)
    t = TWO_PI * u
    return ((np.cos(t) + t * np.sin(t) - 1.0) - 1j * (np.sin(t) - t * np.cos(t))) / (
        4.0 * np.pi**2 * u**2
    )


def special_case_antidiagonal(v):
    """Limit of the canonical closed form on the line u = -v."""
    v = np.asarray(v, dtype=float)
    t = TWO_PI * v
    return -(-1j * t + np.cos(t) + 1j * np.sin(t) - 1.0) / (4.0 * np.pi**2 * v**2)


def _canonical_series(u, v):
    """Canonical transform from its Taylor series, for small |u|, |v|.

    With y = x t the integral becomes int_0^1 G(u + v t) dt, where
    G(a) = int_0^1 x exp(-j 2 pi a x) dx = sum_n (-j 2 pi a)^n / (n! (n + 2)).
    G is summed by Horner's rule; truncated at SERIES_TERMS it is a polynomial
    of degree SERIES_TERMS - 1 in t, which the Gauss-Legendre rule integrates
    exactly.
    """
    # the constant term is summed outside the rule so the origin gives exactly 1/2
    out = np.zeros(u.shape, dtype=complex)
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        z = -1j * TWO_PI * (u + v * t)
        g = np.full(u.shape, _SERIES_COEF[-1], dtype=complex)
        for c in _SERIES_COEF[-2:0:-1]:
            g = c + z * g
        out += w * z * g
    return _SERIES_COEF[0] + out


def cft_canonical_triangle(u, v, eps: float = EPS_SING):
    """Transform of the canonical right triangle (0,0), (1,0), (1,1). Total in (u, v).

    Away from the three singular lines this is the textbook closed form. Within
    ``eps`` of exactly one line the integral is rewritten as a difference
    quotient whose divisor is one of the two non-vanishing quantities; on the
    line itself these reduce to the special-case formulas. Near the origin
    (``SERIES_RADIUS``) a moment series is used (exactly 1/2 at the origin).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    w = u + v
    su, sv, sw = np.abs(u) <= eps, np.abs(v) <= eps, np.abs(w) <= eps
    nsmall = su.astype(int) + sv + sw
    out = np.empty(u.shape, dtype=complex)

    gen = nsmall == 0
    if gen.any():
        out[gen] = canonical_triangle_general(u[gen], v[gen])

    # divide by v: fine when v is the non-vanishing one (u ~ 0 or u + v ~ 0)
    by_v = (nsmall == 1) & (su | sw)
    if by_v.any():
        uu, vv = u[by_v], v[by_v]
        out[by_v] = (_unit_interval_transform(uu + vv) - _unit_interval_transform(uu)) / (
            -1j * TWO_PI * vv
        )

    by_u = (nsmall == 1) & sv
    if by_u.any():
        uu, vv = u[by_u], v[by_u]
        out[by_u] = (
            _unit_interval_transform(uu + vv)
            - np.exp(-1j * TWO_PI * uu) * _unit_interval_transform(vv)
        ) / (1j * TWO_PI * uu)

    # near the origin every closed form cancels catastrophically (error grows
    # like 1/rho^2); the Taylor series converges fast there instead
    near0 = (nsmall >= 2) | (np.maximum(np.abs(u), np.abs(v)) <= SERIES_RADIUS)
    if near0.any():
        out[near0] = _canonical_series(u[near0], v[near0])
    return out if out.ndim else out[()]


def triangle_transform(tris, u, v) -> np.ndarray:
    """Transforms of a stack of triangles, shape (T,) + broadcast(u, v).shape.

    A triangle q, r, s is the image of the canonical triangle under
    x = M xi + q with M = [r - q, s - r], so
    F(u) = |det M| exp(-j 2 pi q.u) F_canonical(M^T u), and |det M| = 2 * area.
    """
    t = np.asarray(tris, dtype=float).reshape(-1, 3, 2)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    q, r, s = t[:, 0], t[:, 1], t[:, 2]
    e1 = r - q
    e2 = s - r
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(0.5 * np.abs(det) <= MIN_TRIANGLE_AREA):
        raise DegenerateTriangle("triangle area at or below the degeneracy floor")
    shape = (len(t),) + (1,) * np.broadcast(u, v).ndim
    ex, ey = e1[:, 0].reshape(shape), e1[:, 1].reshape(shape)
    fx, fy = e2[:, 0].reshape(shape), e2[:, 1].reshape(shape)
    qx, qy = q[:, 0].reshape(shape), q[:, 1].reshape(shape)
    cu = ex * u + ey * v
    cv = fx * u + fy * v
    scale = np.abs(det).reshape(shape)
    return scale * point_transform(qx, qy, u, v) * cft_canonical_triangle(cu, cv)


def _pairwise_sum(parts: np.ndarray) -> np.ndarray:
    """Sum over axis 0 using numpy's pairwise reduction (contiguous last axis)."""
    return np.ascontiguousarray(np.moveaxis(parts, 0, -1)).sum(axis=-1)


# ----------------------------------------------------------- geometry transforms


def transform(g: Geometry, u, v) -> np.ndarray:
    """Evaluate the transform of any geometry at arbitrary (u, v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if isinstance(g, Point):
        return point_transform(g.x, g.y, u, v)
    if isinstance(g, Polyline):
        segs = split_polyline(g)
        parts = np.stack([segment_transform(s.q.xy, s.r.xy, u, v) for s in segs])
        return _pairwise_sum(parts)
    if isinstance(g, (Polygon, MultiPolygon)):
        tris = triangles_as_array(triangulate(g))
        return _pairwise_sum(triangle_transform(tris, u, v))
    raise UnsupportedGeometry(type(g).__name__)


def cft_point(p: Point, grid: FrequencyGrid) -> ComplexSpectrum:
    return ComplexSpectrum(point_transform(p.x, p.y, grid.u, grid.v), grid)


def cft_segment(seg: Union[Segment, Sequence], grid: FrequencyGrid) -> ComplexSpectrum:
    q, r = (seg.q.xy, seg.r.xy) if isinstance(seg, Segment) else seg
    return ComplexSpectrum(segment_transform(q, r, grid.u, grid.v), grid)


def cft_triangle(tri: Union[Triangle, Sequence], grid: FrequencyGrid) -> ComplexSpectrum:
    arr = tri.as_array() if isinstance(tri, Triangle) else np.asarray(tri, dtype=float)
    return ComplexSpectrum(triangle_transform(arr, grid.u, grid.v)[0], grid)


def cft_polyline(pl: Polyline, grid: FrequencyGrid) -> ComplexSpectrum:
    return ComplexSpectrum(transform(pl, grid.u, grid.v), grid)


def cft_polygon(pg: Union[Polygon, MultiPolygon], grid: FrequencyGrid, triangles=None) -> ComplexSpectrum:
    """Sum of triangle transforms; ``triangles`` overrides the triangulation."""
    if triangles is None:
        return ComplexSpectrum(transform(pg, grid.u, grid.v), grid)
    arr = triangles_as_array(triangles)
    return ComplexSpectrum(_pairwise_sum(triangle_transform(arr, grid.u, grid.v)), grid)


def encode_spectrum(g: Geometry, grid: FrequencyGrid) -> ComplexSpectrum:
    """Dispatch on geometry type; multipolygons sum their members."""
    return ComplexSpectrum(transform(g, grid.u, grid.v), grid)


__all__ = [
    "ComplexSpectrum",
    "EPS_SING",
    "cft_canonical_triangle",
    "cft_point",
    "cft_polygon",
    "cft_polyline",
    "cft_segment",
    "cft_triangle",
    "encode_spectrum",
    "point_transform",
    "segment_transform",
    "sinc",
    "special_case_antidiagonal",
    "special_case_u0",
    "special_case_v0",
    "spectrum_values_from_bytes",
    "transform",
    "triangle_transform",
]
