"""Robust planar predicates.

Orientation and in-circle tests use a floating-point filter and fall back to
exact rational arithmetic when the float result is too close to zero to trust
its sign. Every coordinate is a finite double, so ``Fraction`` reproduces it
exactly.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Tuple

XY = Tuple[float, float]

# Shewchuk's static error bounds for the plain float evaluation.
_ORIENT_BOUND = 3.3306690738754716e-16
_INCIRCLE_BOUND = 1.1102230246251577e-15

INSIDE, BOUNDARY, OUTSIDE = 1, 0, -1


def orient2d(a: XY, b: XY, c: XY) -> float:
    """Twice the signed area of triangle abc; positive iff counter-clockwise.

    The sign is always exact. The magnitude is the float estimate unless the
    filter fails, in which case it is the correctly rounded exact value.
    """
    detleft = (b[0] - a[0]) * (c[1] - a[1])
    detright = (b[1] - a[1]) * (c[0] - a[0])
    det = detleft - detright
    if abs(det) > _ORIENT_BOUND * (abs(detleft) + abs(detright)):
        return det
    ax, ay = Fraction(a[0]), Fraction(a[1])
    exact = (Fraction(b[0]) - ax) * (Fraction(c[1]) - ay) - (Fraction(b[1]) - ay) * (
        Fraction(c[0]) - ax
    )
    return float(exact)


def incircle(a: XY, b: XY, c: XY, d: XY) -> float:
    """Positive iff d lies strictly inside the circle through CCW triangle abc."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    t1 = alift * (bdx * cdy - bdy * cdx)
    t2 = blift * (cdx * ady - cdy * adx)
    t3 = clift * (adx * bdy - ady * bdx)
    det = t1 + t2 + t3
    if abs(det) > _INCIRCLE_BOUND * (abs(t1) + abs(t2) + abs(t3)) + 1e-300:
        return det
    fd = (Fraction(d[0]), Fraction(d[1]))
    rows = []
    for p in (a, b, c):
        dx, dy = Fraction(p[0]) - fd[0], Fraction(p[1]) - fd[1]
        rows.append((dx, dy, dx * dx + dy * dy))
    (ax_, ay_, al), (bx_, by_, bl), (cx_, cy_, cl) = rows
    exact = (
        al * (bx_ * cy_ - by_ * cx_)
        + bl * (cx_ * ay_ - cy_ * ax_)
        + cl * (ax_ * by_ - ay_ * bx_)
    )
    return float(exact)


def _on_segment_collinear(p: XY, q: XY, r: XY) -> bool:
    """For collinear p, q, r: is r within the closed bounding box of pq."""
    return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(
        p[1], q[1]
    )


def point_on_segment(p: XY, a: XY, b: XY) -> bool:
    return orient2d(a, b, p) == 0 and _on_segment_collinear(a, b, p)


def segments_intersect(p1: XY, p2: XY, q1: XY, q2: XY) -> bool:
    """Closed segments p1p2 and q1q2 share at least one point."""
    d1 = orient2d(q1, q2, p1)
    d2 = orient2d(q1, q2, p2)
    d3 = orient2d(p1, p2, q1)
    d4 = orient2d(p1, p2, q2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment_collinear(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment_collinear(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment_collinear(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment_collinear(p1, p2, q2):
        return True
    return False


def segments_cross_properly(p1: XY, p2: XY, q1: XY, q2: XY) -> bool:
    """Segments meet at a single point interior to both."""
    d1 = orient2d(q1, q2, p1)
    d2 = orient2d(q1, q2, p2)
    d3 = orient2d(p1, p2, q1)
    d4 = orient2d(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def point_in_ring(p: XY, ring: Sequence[XY]) -> int:
    """Locate p against a closed ring (first == last).

    Returns INSIDE, BOUNDARY or OUTSIDE. Uses the crossing-number rule with
    exact orientation signs, so the result does not depend on ring
    orientation.
    """
    inside = False
    px, py = p
    for i in range(len(ring) - 1):
        a, b = ring[i], ring[i + 1]
        if point_on_segment(p, a, b):
            return BOUNDARY
        if (a[1] > py) != (b[1] > py):
            o = orient2d(a, b, p)
            # upward edge: p left of it means the edge crosses the ray to +x
            if (b[1] > a[1] and o > 0) or (b[1] < a[1] and o < 0):
                inside = not inside
    return INSIDE if inside else OUTSIDE
