"""Brute-force numerical integration of exp(-j 2 pi (u x + v y)) over shapes.

Nothing here touches the closed forms in ``spectral``; it exists to check
them. Triangles are integrated by adaptive 4-way midpoint refinement with a
degree-7, 13-point symmetric rule per cell. A cell is accepted once the
difference between its own estimate and the sum over its four children falls
below its area share of the tolerance; work is vectorized over every
requested frequency at once.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import NoConvergence
from .triangulation import Triangle, triangles_as_array, triangulate

MAX_CELLS = 2**20
MIN_DEPTH = 1

# Dunavant's degree-7 rule: (weight, barycentric orbit generator)
_RULE = (
    (-0.149570044467682, (1 / 3, 1 / 3, 1 / 3)),
    (0.175615257433208, (0.479308067841920, 0.260345966079040, 0.260345966079040)),
    (0.053347235608838, (0.869739794195568, 0.065130102902216, 0.065130102902216)),
    (0.077113760890257, (0.638444188569810, 0.312865496004874, 0.048690315425316)),
)


def _expand_rule():
    bary, weights = [], []
    for w, b in _RULE:
        for perm in sorted(set(itertools.permutations(b))):
            bary.append(perm)
            weights.append(w)
    weights = np.array(weights)
    return np.array(bary), weights / weights.sum()


BARY, WEIGHTS = _expand_rule()


def _cell_integrals(cells: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rule applied to each cell: (C, 3, 2) cells -> (C, K) complex."""
    pts = np.einsum("nk,ckd->cnd", BARY, cells)  # (C, 13, 2)
    e1 = cells[:, 1] - cells[:, 0]
    e2 = cells[:, 2] - cells[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    phase = -2j * np.pi * (pts[..., 0, None] * u + pts[..., 1, None] * v)  # (C, 13, K)
    return area[:, None] * np.einsum("n,cnk->ck", WEIGHTS, np.exp(phase))


def _refine(cells: np.ndarray) -> np.ndarray:
    """Split each cell into four similar half-size copies: (C,3,2) -> (4C,3,2).

    Longest-edge bisection is not used: for an integrand that varies along a
    single direction, bisecting a right triangle along its hypotenuse yields
    children with the parent's profile in that direction, and the
    coarse/fine comparison then agrees exactly while both are wrong.
    """
    a, b, c = cells[:, 0], cells[:, 1], cells[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([bc, ca, ab], axis=1),
        ]
    )


def quad_triangles(tris, u, v, tol: float = 1e-10, max_cells: int = MAX_CELLS):
    """Integrate over the union of triangles; returns (value, error estimate).

    ``u`` and ``v`` may be scalars or 1-D arrays of equal length; the value has
    their shape.
    """
    if not (1e-12 < tol < 1e-3):
        raise ValueError(f"tol must lie in (1e-12, 1e-3), got {tol}")
    cells = np.asarray(tris, dtype=float).reshape(-1, 3, 2)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    u_arr, v_arr = np.broadcast_arrays(u_arr, v_arr)
    e1 = cells[:, 1] - cells[:, 0]
    e2 = cells[:, 2] - cells[:, 0]
    total_area = float(np.sum(0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])))

    # forced uniform refinement first: on symmetric cells a one-level
    # comparison can agree by accident and stop too early
    for _ in range(MIN_DEPTH):
        cells = _refine(cells)
    # rough magnitude for the relative part of the tolerance
    scale = 1.0 + np.abs(_cell_integrals(cells, u_arr, v_arr).sum(axis=0))
    coarse = _cell_integrals(cells, u_arr, v_arr)
    result = np.zeros(u_arr.shape, dtype=complex)
    err_total = np.zeros(u_arr.shape)
    used = len(cells)
    while len(cells):
        kids = _refine(cells)
        fine = _cell_integrals(kids, u_arr, v_arr)
        n = len(cells)
        fine_sum = fine.reshape(4, n, -1).sum(axis=0)
        err = np.abs(fine_sum - coarse)
        e1 = cells[:, 1] - cells[:, 0]
        e2 = cells[:, 2] - cells[:, 0]
        share = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) / total_area
        ok = np.all(err <= 0.1 * tol * share[:, None] * scale[None, :], axis=1)
        result += fine_sum[ok].sum(axis=0)
        err_total += err[ok].sum(axis=0)
        bad = ~ok
        cells = kids.reshape(4, n, 3, 2)[:, bad].reshape(-1, 3, 2)
        coarse = fine.reshape(4, n, -1)[:, bad].reshape(-1, u_arr.size)
        used += len(cells)
        if used > max_cells:
            raise NoConvergence(f"subdivision budget of {max_cells} cells exhausted")
    if np.ndim(u) == 0 and np.ndim(v) == 0:
        return result[0], err_total[0]
    return result, err_total


def quad_triangle(tri, u, v, tol: float = 1e-10):
    """Adaptive cubature of exp(-j 2 pi (u x + v y)) over one triangle."""
    arr = tri.as_array() if isinstance(tri, Triangle) else tri
    return quad_triangles(arr, u, v, tol)[0]


def quad_polygon(pg, u, v, tol: float = 1e-10, method: str = "ear"):
    """Cubature over a polygon's triangulation (any partition gives the same integral)."""
    return quad_triangles(triangles_as_array(triangulate(pg, method)), u, v, tol)[0]


def quad_segment(seg, u, v, n: int = 64):
    """Arc-length line integral of exp(-j 2 pi (u x + v y)) along a segment.

    Composite Gauss-Legendre: n nodes split into panels of 8.
    """
    if n < 64:
        raise ValueError("quad_segment needs n >= 64")
    if hasattr(seg, "q"):
        q, r = np.array(seg.q.xy), np.array(seg.r.xy)
    else:
        q, r = np.asarray(seg[0], dtype=float), np.asarray(seg[1], dtype=float)
    length = float(np.hypot(*(r - q)))
    panels = max(1, n // 8)
    x8, w8 = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    t = (mids[:, None] + half[:, None] * x8[None, :]).ravel()
    w = (half[:, None] * w8[None, :]).ravel()
    xs = q[0] + t * (r[0] - q[0])
    ys = q[1] + t * (r[1] - q[1])
    u_arr = np.asarray(u, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    phase = -2j * np.pi * (np.multiply.outer(u_arr, xs) + np.multiply.outer(v_arr, ys))
    return length * (np.exp(phase) @ w)


__all__ = ["quad_polygon", "quad_segment", "quad_triangle", "quad_triangles"]
