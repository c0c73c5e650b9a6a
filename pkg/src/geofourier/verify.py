"""Self-checks: closed forms against quadrature, transform laws, gradients.

Each check returns a ``CheckResult`` with the worst observed error and the
tolerance it was held to. ``run_checks`` runs the whole suite; ``mutated``
swaps in a deliberately wrong sinc so the suite can prove it notices.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional

import numpy as np

from . import spectral
from .autodiff import Tape
from .fusion import EncoderShape, as_vars, encode_batch, head_forward, init_encoder, init_head, predicted_distance
from .frequency_grid import default_grid
from .geometry import Point, Polygon, map_coords, translate
from .oracle import quad_segment, quad_triangles
from .spectral import cft_polygon, segment_transform, transform, triangle_transform
from .triangulation import fan_triangulate, triangles_as_array, triangulate

TOLERANCES = {
    "triangle_oracle": 1e-6,
    "segment_oracle": 1e-9,
    "polygon_oracle": 1e-6,
    "unit_square": 1e-9,
    "identities": 1e-10,
    "hermitian": 1e-12,
    "translation": 1e-10,
    "triangulation_invariance": 1e-9,
    "affine": 1e-8,
    "linearity": 1e-10,
    "gradients": 1e-4,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<26} max err {self.error:.3e}  tol {self.tol:.1e}"


# ------------------------------------------------------------ random shapes


def random_triangles(rng: np.random.Generator, n: int, min_area: float = 1e-3) -> np.ndarray:
    out = []
    while len(out) < n:
        t = rng.uniform(-1, 1, size=(3, 2))
        e1, e2 = t[1] - t[0], t[2] - t[0]
        if 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0]) >= min_area:
            out.append(t)
    return np.array(out)


def random_star_polygon(rng: np.random.Generator, n: Optional[int] = None) -> Polygon:
    n = int(rng.integers(4, 13)) if n is None else n
    # every angular gap below pi keeps the ring simple and star-shaped about c
    gaps = rng.uniform(0.5, 1.5, size=n)
    angles = rng.uniform(0, 2 * np.pi) + np.cumsum(gaps) / gaps.sum() * 2 * np.pi
    radii = rng.uniform(0.3, 1.0, size=n)
    c = rng.uniform(-0.3, 0.3, size=2)
    verts = [(c[0] + r * math.cos(a) * 0.7, c[1] + r * math.sin(a) * 0.7) for a, r in zip(angles, radii)]
    return Polygon.from_vertices(verts)


def _rel(a, b) -> float:
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(b))))


# ------------------------------------------------------------------- checks


def check_triangle_oracle(n: int = 100, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    grid = default_grid()
    tris = random_triangles(np.random.default_rng([seed, 1]), n)
    analytic = triangle_transform(tris, grid.u, grid.v)
    worst = 0.0
    for t, a in zip(tris, analytic):
        ref, _ = quad_triangles(t[None], grid.u, grid.v, tol=1e-10)
        worst = max(worst, _rel(a, ref))
    return CheckResult("triangle_oracle", worst, tol or TOLERANCES["triangle_oracle"])


def check_segment_oracle(n: int = 100, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    grid = default_grid()
    rng = np.random.default_rng([seed, 2])
    worst = 0.0
    for _ in range(n):
        q, r = rng.uniform(-1, 1, size=2), rng.uniform(-1, 1, size=2)
        length = float(np.hypot(*(r - q)))
        analytic = segment_transform(q, r, grid.u, grid.v)
        ref = length * quad_segment((q, r), grid.u, grid.v, n=128)
        worst = max(worst, _rel(analytic, ref))
    return CheckResult("segment_oracle", worst, tol or TOLERANCES["segment_oracle"])


def check_polygon_oracle(n: int = 10, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    grid = default_grid()
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    for _ in range(n):
        pg = random_star_polygon(rng)
        # quadrature over the ear-clipped partition, analytic over the default one
        ref, _ = quad_triangles(triangles_as_array(triangulate(pg, "ear")), grid.u, grid.v, tol=1e-10)
        worst = max(worst, _rel(cft_polygon(pg, grid).values, ref))
    return CheckResult("polygon_oracle", worst, tol or TOLERANCES["polygon_oracle"])


def check_unit_square(tol: Optional[float] = None) -> CheckResult:
    grid = default_grid()
    sq = Polygon.from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])
    expected = np.exp(-1j * np.pi * (grid.u + grid.v)) * np.sinc(grid.u) * np.sinc(grid.v)
    got = cft_polygon(sq, grid).values
    return CheckResult("unit_square", float(np.max(np.abs(got - expected))), tol or TOLERANCES["unit_square"])


def check_identities(n: int = 50, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    """Point magnitude 1; value at the origin = squared length / area."""
    grid = default_grid()
    rng = np.random.default_rng([seed, 4])
    worst = 0.0
    for _ in range(n):
        p = rng.uniform(-1, 1, size=2)
        worst = max(worst, float(np.max(np.abs(np.abs(spectral.point_transform(p[0], p[1], grid.u, grid.v)) - 1.0))))
        q, r = rng.uniform(-1, 1, size=2), rng.uniform(-1, 1, size=2)
        l2 = float(np.sum((r - q) ** 2))
        worst = max(worst, abs(complex(segment_transform(q, r, 0.0, 0.0)) - l2) / l2)
        t = random_triangles(rng, 1)[0]
        (ax, ay), (bx, by) = t[1] - t[0], t[2] - t[0]
        area = 0.5 * abs(ax * by - ay * bx)
        worst = max(worst, abs(complex(triangle_transform(t, 0.0, 0.0)[0]) - area) / area)
        pg = random_star_polygon(rng)
        worst = max(worst, abs(complex(transform(pg, 0.0, 0.0)) - pg.area) / pg.area)
    return CheckResult("identities", worst, tol or TOLERANCES["identities"])


def check_hermitian(n: int = 20, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    full = default_grid(mode="full")
    rng = np.random.default_rng([seed, 5])
    worst = 0.0
    for _ in range(n):
        pg = random_star_polygon(rng)
        for g in (pg, Point(*rng.uniform(-1, 1, size=2))):
            f = transform(g, full.u, full.v)
            mirror = transform(g, -full.u, -full.v)
            worst = max(worst, float(np.max(np.abs(mirror - np.conj(f)))))
    return CheckResult("hermitian", worst, tol or TOLERANCES["hermitian"])


def check_translation(n: int = 20, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    grid = default_grid()
    rng = np.random.default_rng([seed, 6])
    worst = 0.0
    for _ in range(n):
        pg = random_star_polygon(rng)
        tx, ty = rng.uniform(-0.5, 0.5, size=2)
        f0 = transform(pg, grid.u, grid.v)
        f1 = transform(translate(pg, tx, ty), grid.u, grid.v)
        ramp = np.exp(-2j * np.pi * (tx * grid.u + ty * grid.v))
        worst = max(worst, float(np.max(np.abs(np.abs(f1) - np.abs(f0)))), float(np.max(np.abs(f1 - ramp * f0))))
    return CheckResult("translation", worst, tol or TOLERANCES["translation"])


def check_triangulation_invariance(n: int = 20, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    grid = default_grid()
    rng = np.random.default_rng([seed, 7])
    worst = 0.0
    for _ in range(n):
        pg = random_star_polygon(rng)
        ref = cft_polygon(pg, grid, triangulate(pg, "cdt")).values
        alts = [triangulate(pg, "ear")]
        verts = pg.exterior[:-1]
        # fans are only valid partitions when the apex sees the whole ring
        alts.append(fan_triangulate(verts, int(np.argmin([v[0] for v in verts]))) if _convex(verts) else alts[0])
        for tris in alts:
            worst = max(worst, float(np.max(np.abs(cft_polygon(pg, grid, tris).values - ref))))
    return CheckResult("triangulation_invariance", worst, tol or TOLERANCES["triangulation_invariance"])


def _convex(verts) -> bool:
    n = len(verts)
    signs = set()
    for i in range(n):
        a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        signs.add(cross > 0)
    return len(signs) == 1


def check_affine(n: int = 20, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    """Image under x -> A x + t: |det A| exp(-j 2 pi t.u) F(A^T u)."""
    grid = default_grid()
    rng = np.random.default_rng([seed, 8])
    worst = 0.0
    for _ in range(n):
        pg = random_star_polygon(rng)
        a = rng.uniform(-1.2, 1.2, size=(2, 2))
        while abs(np.linalg.det(a)) < 0.2:
            a = rng.uniform(-1.2, 1.2, size=(2, 2))
        t = rng.uniform(-0.5, 0.5, size=2)
        image = map_coords(pg, lambda x, y: (a[0, 0] * x + a[0, 1] * y + t[0], a[1, 0] * x + a[1, 1] * y + t[1]))
        lhs = transform(image, grid.u, grid.v)
        uu = a[0, 0] * grid.u + a[1, 0] * grid.v
        vv = a[0, 1] * grid.u + a[1, 1] * grid.v
        rhs = abs(np.linalg.det(a)) * np.exp(-2j * np.pi * (t[0] * grid.u + t[1] * grid.v)) * transform(pg, uu, vv)
        worst = max(worst, _rel(lhs, rhs))
    return CheckResult("affine", worst, tol or TOLERANCES["affine"])


def check_linearity(n: int = 20, seed: int = 0, tol: Optional[float] = None) -> CheckResult:
    """A square split into two rectangles: the halves' spectra sum to the whole."""
    grid = default_grid()
    rng = np.random.default_rng([seed, 9])
    worst = 0.0
    for _ in range(n):
        x0, y0 = rng.uniform(-1, 0, size=2)
        w, h = rng.uniform(0.2, 1.0, size=2)
        cut = x0 + w * rng.uniform(0.2, 0.8)
        whole = Polygon.from_vertices([(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)])
        left = Polygon.from_vertices([(x0, y0), (cut, y0), (cut, y0 + h), (x0, y0 + h)])
        right = Polygon.from_vertices([(cut, y0), (x0 + w, y0), (x0 + w, y0 + h), (cut, y0 + h)])
        total = cft_polygon(left, grid) + cft_polygon(right, grid)
        worst = max(worst, _rel(total.values, cft_polygon(whole, grid).values))
    return CheckResult("linearity", worst, tol or TOLERANCES["linearity"])


# --------------------------------------------------------------- gradients


def _model_loss(params, z, phi, labels, block: str, seed: int):
    """Scalar loss exercising ``block``; returns (tape, param vars, loss var)."""
    tape = Tape()
    p = as_vars(params)
    half = len(z) // 2
    va = encode_batch(tape, z[:half], phi[:half], p)
    vb = encode_batch(tape, z[half:], phi[half:], p)
    if block == "distance":
        dist = np.abs(np.random.default_rng(seed).normal(size=half))
        loss = tape.mse(predicted_distance(tape, va, vb), dist)
    else:
        loss = tape.cross_entropy(head_forward(tape, va, vb, p), labels[:half])
    return tape, p, loss


def gradient_check(block: str, probes: int = 10, seed: int = 0, step: float = 1e-5) -> float:
    """Worst relative error of reverse-mode gradients against central differences.

    ``block`` is one of h_z, h_phi, h_final, head or distance; ``probes``
    random parameter entries of that block (all blocks for distance) are
    perturbed by +-step.
    """
    rng = np.random.default_rng([seed, 11])
    n_freq, d, n_cls = 12, 4, 3
    params = init_encoder(EncoderShape(n_freq, d, 8, 8, 10), seed)
    params.update(init_head(d, n_cls, 6, seed))
    z = np.abs(rng.normal(size=(8, n_freq)))
    phi = rng.uniform(-np.pi, np.pi, size=(8, n_freq))
    labels = rng.integers(0, n_cls, size=8)

    def loss_at(pr) -> float:
        return float(_model_loss(pr, z, phi, labels, block, seed)[2].data)

    tape, p, loss = _model_loss(params, z, phi, labels, block, seed)
    tape.backward(loss)
    names = [k for k in sorted(params) if block == "distance" and not k.startswith("head") or k.startswith(block + ".")]
    worst = 0.0
    for _ in range(probes):
        k = names[int(rng.integers(len(names)))]
        idx = tuple(int(rng.integers(s)) for s in params[k].shape)
        analytic = p[k].grad[idx] if p[k].grad is not None else 0.0
        plus = {n: a.copy() for n, a in params.items()}
        minus = {n: a.copy() for n, a in params.items()}
        plus[k][idx] += step
        minus[k][idx] -= step
        numeric = (loss_at(plus) - loss_at(minus)) / (2 * step)
        worst = max(worst, abs(analytic - numeric) / max(1e-8, abs(analytic), abs(numeric)))
    return worst


def check_gradients(tol: Optional[float] = None, seed: int = 0) -> CheckResult:
    worst = max(gradient_check(b, seed=seed) for b in ("h_z", "h_phi", "h_final", "head", "distance"))
    return CheckResult("gradients", worst, tol or TOLERANCES["gradients"])


# -------------------------------------------------------------------- suite

CHECKS: Dict[str, Callable[..., CheckResult]] = {
    "triangle_oracle": check_triangle_oracle,
    "segment_oracle": check_segment_oracle,
    "polygon_oracle": check_polygon_oracle,
    "unit_square": check_unit_square,
    "identities": check_identities,
    "hermitian": check_hermitian,
    "translation": check_translation,
    "triangulation_invariance": check_triangulation_invariance,
    "affine": check_affine,
    "linearity": check_linearity,
    "gradients": check_gradients,
}

# checks whose workload scales with a sample count
_COUNTED = {"triangle_oracle", "segment_oracle", "polygon_oracle"}


def _bad_sinc(t):
    # unnormalized sinc: the kind of slip the oracle comparison must catch
    t = np.asarray(t, dtype=float)
    return np.sinc(t / np.pi)


@contextlib.contextmanager
def mutated(kind: str = "sinc") -> Iterator[None]:
    if kind != "sinc":
        raise ValueError(f"unknown mutation {kind!r}")
    saved = spectral.sinc
    spectral.sinc = _bad_sinc
    try:
        yield
    finally:
        spectral.sinc = saved


def run_checks(names: Optional[List[str]] = None, tol: Optional[float] = None,
               count: Optional[int] = None, seed: int = 0) -> List[CheckResult]:
    """Run the named checks (all by default). ``tol`` overrides every tolerance."""
    results = []
    for name in names or list(CHECKS):
        if name not in CHECKS:
            raise ValueError(f"unknown check {name!r}")
        kw = {"tol": tol}
        if name in _COUNTED and count is not None:
            kw["n"] = count
        if name != "unit_square":
            kw["seed"] = seed
        results.append(CHECKS[name](**kw))
    return results
