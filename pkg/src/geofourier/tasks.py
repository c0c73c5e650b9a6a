"""Spatial-reasoning tasks: labels, synthetic pair generation, losses, metrics.

Three tasks are supported. ``topo`` classifies the topological relation of a
pair, ``direction`` the 16-point compass bearing between centroids, and
``distance`` regresses the centroid distance. Generated coordinates are
snapped to a dyadic lattice so that constructed contacts (shared vertices,
edge midpoints, copies) are exact in floating point; every label is then
re-derived from the pair by the predicates below before it is accepted.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .autodiff import Tape, Var
from .errors import (
    CoincidentCentroids,
    ConfigError,
    EmptyInput,
    GenerationBudgetExceeded,
    UnsupportedPair,
    ValidationError,
)
from .fusion import head_forward
from .geometry import Geometry, MultiPolygon, Point, Polygon, Polyline, all_coords, centroid
from .predicates import INSIDE
from .relations import locate_in_polygon, relate

TASKS = ("topo", "direction", "distance")

TOPO_CLASSES: Dict[str, Tuple[str, ...]] = {
    "point-polyline": ("disjoint", "intersects"),
    "point-polygon": ("disjoint", "contains"),
    "polyline-polyline": ("disjoint", "intersects"),
    "polyline-polygon": ("disjoint", "touches", "intersects", "within"),
    "polygon-polygon": ("disjoint", "touches", "intersects", "contains", "within", "equals"),
}

COMPASS = (
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE",
    "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
)

PAIR_TYPES = (
    "point-point",
    "point-polyline",
    "point-polygon",
    "polyline-polyline",
    "polyline-polygon",
    "polygon-polygon",
)

# generated coordinates are multiples of this (exactly representable)
LATTICE = 1.0 / 4096.0
SPLIT_RATIOS = (0.6, 0.2, 0.2)
SPLIT_NAMES = ("train", "val", "test")


def _kind(g: Geometry) -> str:
    if isinstance(g, Point):
        return "point"
    if isinstance(g, Polyline):
        return "polyline"
    if isinstance(g, (Polygon, MultiPolygon)):
        return "polygon"
    raise UnsupportedPair(type(g).__name__)


def pair_type(g_a: Geometry, g_b: Geometry) -> str:
    return f"{_kind(g_a)}-{_kind(g_b)}"


def class_names(task: str, ptype: str) -> Tuple[str, ...]:
    if task == "topo":
        if ptype not in TOPO_CLASSES:
            raise UnsupportedPair(f"no topological classes for pair type {ptype!r}")
        return TOPO_CLASSES[ptype]
    if task == "direction":
        return COMPASS
    if task == "distance":
        return ()
    raise ConfigError(f"unknown task {task!r}; expected one of {', '.join(TASKS)}")


# ------------------------------------------------------------------- labels


def topo_name(g_a: Geometry, g_b: Geometry) -> str:
    """Relation name of the pair, restricted to its pair type's class set.

    Lower-dimensional geometry comes first (``point-polygon``, not
    ``polygon-point``). Points and polylines only separate touching from
    not touching, so any contact is reported as ``intersects`` and a point
    inside a polygon as ``contains``.
    """
    ptype = pair_type(g_a, g_b)
    if ptype not in TOPO_CLASSES:
        raise UnsupportedPair(f"topological labels are not defined for {ptype}")
    rel = relate(g_a, g_b)
    if ptype in ("point-polyline", "polyline-polyline"):
        return "disjoint" if rel == "disjoint" else "intersects"
    if ptype == "point-polygon":
        if rel == "touches":
            raise UnsupportedPair("point on the polygon boundary has no class in {disjoint, contains}")
        return "contains" if rel == "within" else "disjoint"
    if ptype == "polyline-polygon" and rel == "equals":
        raise UnsupportedPair("unexpected relation for polyline-polygon")
    return rel


def topo_label(g_a: Geometry, g_b: Geometry) -> int:
    return TOPO_CLASSES[pair_type(g_a, g_b)].index(topo_name(g_a, g_b))


def bearing_class(dx: float, dy: float) -> int:
    """Compass class of an offset: 0 = N, clockwise, half-open 22.5 degree bins."""
    if dx == 0.0 and dy == 0.0:
        raise CoincidentCentroids("direction undefined for coincident centroids")
    theta = math.degrees(math.atan2(dy, dx))
    return int(((90.0 - theta + 11.25) % 360.0) // 22.5) % 16


def dir_label(g_a: Geometry, g_b: Geometry) -> int:
    ca, cb = centroid(g_a), centroid(g_b)
    return bearing_class(cb.x - ca.x, cb.y - ca.y)


def dist_label(g_a: Geometry, g_b: Geometry) -> float:
    ca, cb = centroid(g_a), centroid(g_b)
    return math.hypot(cb.x - ca.x, cb.y - ca.y)


# ----------------------------------------------------------- random shapes


def _snap(v: float) -> float:
    return min(1.0, max(-1.0, round(v / LATTICE) * LATTICE))


def _snap_xy(p) -> Tuple[float, float]:
    return (_snap(p[0]), _snap(p[1]))


def random_point(rng: np.random.Generator, lo: float = -1.0, hi: float = 1.0) -> Point:
    return Point(*_snap_xy(rng.uniform(lo, hi, size=2)))


def random_polyline(rng: np.random.Generator, center=None, scale: Optional[float] = None) -> Polyline:
    """2 to 6 vertices, a random walk inside a box around ``center``."""
    n = int(rng.integers(2, 7))
    scale = rng.uniform(0.1, 0.5) if scale is None else scale
    c = rng.uniform(-1 + scale, 1 - scale, size=2) if center is None else np.asarray(center)
    heading = rng.uniform(0, 2 * np.pi)
    pts = [c + rng.uniform(-scale, scale, size=2) * 0.5]
    step = scale / max(1, n - 1) * 1.5
    for _ in range(n - 1):
        heading += rng.normal(0.0, 0.8)
        pts.append(pts[-1] + step * np.array([np.cos(heading), np.sin(heading)]))
    coords = []
    for p in pts:
        s = _snap_xy(p)
        if not coords or s != coords[-1]:
            coords.append(s)
    if len(coords) < 2 or coords[0] == coords[-1]:
        raise ValidationError("degenerate random polyline")
    return Polyline(tuple(coords))


def random_polygon(rng: np.random.Generator, center=None, radius: Optional[float] = None,
                   convex: Optional[bool] = None) -> Polygon:
    """Convex or star-shaped polygon with 4 to 12 vertices."""
    n = int(rng.integers(4, 13))
    radius = rng.uniform(0.1, 0.45) if radius is None else radius
    c = rng.uniform(-1 + radius, 1 - radius, size=2) if center is None else np.asarray(center)
    convex = bool(rng.integers(2)) if convex is None else convex
    # sorted angles with a minimum gap keep the ring simple around c
    gaps = rng.uniform(0.5, 1.5, size=n)
    angles = rng.uniform(0, 2 * np.pi) + np.cumsum(gaps) / gaps.sum() * 2 * np.pi
    radii = np.full(n, radius) if convex else radius * rng.uniform(0.45, 1.0, size=n)
    verts = [_snap_xy(c + r * np.array([np.cos(a), np.sin(a)])) for a, r in zip(angles, radii)]
    return Polygon.from_vertices(verts)


def scaled_copy(pg: Polygon, about, s: float) -> Polygon:
    cx, cy = about
    verts = [_snap_xy((cx + s * (x - cx), cy + s * (y - cy))) for x, y in pg.exterior[:-1]]
    return Polygon.from_vertices(verts)


def rotated_copy(pg: Polygon, start: int) -> Polygon:
    """Same polygon, ring starting at a different vertex."""
    verts = list(pg.exterior[:-1])
    k = start % len(verts)
    return Polygon.from_vertices(verts[k:] + verts[:k])


def _point_inside(rng: np.random.Generator, pg: Polygon, tries: int = 200) -> Point:
    xs = [p[0] for p in pg.exterior]
    ys = [p[1] for p in pg.exterior]
    for _ in range(tries):
        p = (_snap(rng.uniform(min(xs), max(xs))), _snap(rng.uniform(min(ys), max(ys))))
        if locate_in_polygon(p, pg) == INSIDE:
            return Point(*p)
    raise ValidationError("could not place a point inside the polygon")


def _edge_midpoint(rng: np.random.Generator, coords: Sequence) -> Tuple[Tuple[float, float], int]:
    i = int(rng.integers(len(coords) - 1))
    (x0, y0), (x1, y1) = coords[i], coords[i + 1]
    # midpoints of lattice points are exact and lie exactly on the segment
    return ((x0 + x1) / 2.0, (y0 + y1) / 2.0), i


def _in_bounds(p) -> bool:
    return -1.0 <= p[0] <= 1.0 and -1.0 <= p[1] <= 1.0


def _outward_polyline(rng, start, direction, n=None, step=None) -> Polyline:
    n = int(rng.integers(2, 5)) if n is None else n
    step = rng.uniform(0.05, 0.2) if step is None else step
    heading = math.atan2(direction[1], direction[0])
    pts = [tuple(start)]
    cur = np.asarray(start, dtype=float)
    for _ in range(n - 1):
        heading += rng.normal(0.0, 0.3)
        cur = cur + step * np.array([math.cos(heading), math.sin(heading)])
        s = _snap_xy(cur)
        if s != pts[-1]:
            pts.append(s)
    if len(pts) < 2:
        raise ValidationError("degenerate polyline")
    return Polyline(tuple(pts))


def _outward_normal(a, b) -> np.ndarray:
    # exterior rings are CCW, so the outside lies to the right of a->b
    d = np.subtract(b, a)
    return np.array([d[1], -d[0]]) / max(np.hypot(*d), 1e-300)


# ------------------------------------------------------ per-class builders


def _build_topo(ptype: str, name: str, rng: np.random.Generator) -> Tuple[Geometry, Geometry]:
    if ptype == "point-polygon":
        pg = random_polygon(rng)
        if name == "contains":
            return _point_inside(rng, pg), pg
        return random_point(rng), pg
    if ptype == "point-polyline":
        pl = random_polyline(rng)
        if name == "intersects":
            if rng.random() < 0.5:
                return Point(*pl.coords[int(rng.integers(len(pl.coords)))]), pl
            return Point(*_edge_midpoint(rng, pl.coords)[0]), pl
        return random_point(rng), pl
    if ptype == "polyline-polyline":
        a = random_polyline(rng)
        if name == "intersects":
            m, i = _edge_midpoint(rng, a.coords)
            d = rng.normal(size=2)
            b_coords = [_snap_xy(m - rng.uniform(0.05, 0.3) * d / np.hypot(*d)), m,
                        _snap_xy(m + rng.uniform(0.05, 0.3) * d / np.hypot(*d))]
            return a, Polyline(tuple(b_coords))
        return a, random_polyline(rng)
    if ptype == "polyline-polygon":
        pg = random_polygon(rng, convex=name == "within" or None)
        ring = pg.exterior
        if name == "within":
            n = int(rng.integers(2, 5))
            pts = []
            while len(pts) < n:
                p = _point_inside(rng, pg).xy
                if not pts or p != pts[-1]:
                    pts.append(p)
            return Polyline(tuple(pts)), pg
        if name == "touches":
            m, i = _edge_midpoint(rng, ring)
            start = m if rng.random() < 0.5 else ring[i]
            normal = _outward_normal(ring[i], ring[i + 1])
            return _outward_polyline(rng, start, normal), pg
        if name == "intersects":
            inside = _point_inside(rng, pg).xy
            m, i = _edge_midpoint(rng, ring)
            out = _snap_xy(np.asarray(m) + rng.uniform(0.05, 0.3) * _outward_normal(ring[i], ring[i + 1]))
            return Polyline((inside, out)), pg
        return random_polyline(rng), pg
    if ptype == "polygon-polygon":
        a = random_polygon(rng)
        ring = a.exterior
        if name == "equals":
            return a, rotated_copy(a, int(rng.integers(1, len(ring) - 1)))
        if name in ("contains", "within"):
            c = np.mean(np.array(ring[:-1]), axis=0)
            # scale about a point the polygon is star-shaped around
            core = a if locate_in_polygon(tuple(c), a) == INSIDE else None
            if core is None:
                raise ValidationError("centroid of vertices not inside")
            small = scaled_copy(a, tuple(c), rng.uniform(0.3, 0.8))
            return (a, small) if name == "contains" else (small, a)
        if name == "touches":
            m, i = _edge_midpoint(rng, ring)
            p0, p1 = ring[i], ring[i + 1]
            normal = _outward_normal(p0, p1)
            if rng.random() < 0.5:
                # share (part of) an edge
                h = rng.uniform(0.03, 0.15)
                apex = _snap_xy(np.asarray(m) + h * normal)
                return a, Polygon.from_vertices([p1, p0, apex])
            # touch at a single point
            r = rng.uniform(0.05, 0.2)
            c = np.asarray(m) + r * normal
            t = np.array([-normal[1], normal[0]])
            verts = [m, _snap_xy(c + r * t), _snap_xy(c + r * normal), _snap_xy(c - r * t)]
            return a, Polygon.from_vertices(verts)
        if name == "intersects":
            m, i = _edge_midpoint(rng, ring)
            return a, random_polygon(rng, center=m, radius=rng.uniform(0.08, 0.3))
        return a, random_polygon(rng)
    raise UnsupportedPair(f"topological pairs are not generated for {ptype}")


def _random_of_kind(kind: str, rng: np.random.Generator) -> Geometry:
    if kind == "point":
        return random_point(rng)
    if kind == "polyline":
        return random_polyline(rng)
    return random_polygon(rng)


def _build_direction(ptype: str, k: int, rng: np.random.Generator) -> Tuple[Geometry, Geometry]:
    ka, kb = ptype.split("-")
    if ptype == "point-point":
        a = random_point(rng)
        # bearing inside the bin, clear of its edges
        bearing = 22.5 * k + rng.uniform(-10.5, 10.5)
        theta = math.radians(90.0 - bearing)
        r = rng.uniform(0.1, 1.0)
        b = Point(*_snap_xy((a.x + r * math.cos(theta), a.y + r * math.sin(theta))))
        return a, b
    return _random_of_kind(ka, rng), _random_of_kind(kb, rng)


def _build_distance(ptype: str, rng: np.random.Generator) -> Tuple[Geometry, Geometry]:
    ka, kb = ptype.split("-")
    return _random_of_kind(ka, rng), _random_of_kind(kb, rng)


def _in_unit_box(g: Geometry) -> bool:
    return all(_in_bounds(p) for p in all_coords(g))


# --------------------------------------------------------------- pair sets


@dataclass(frozen=True)
class PairSample:
    g_a: Geometry
    g_b: Geometry
    topo_label: Optional[int] = None
    dir_label: Optional[int] = None
    dist_label: Optional[float] = None

    def label(self, task: str):
        return {"topo": self.topo_label, "direction": self.dir_label, "distance": self.dist_label}[task]


@dataclass(frozen=True)
class GenConfig:
    task: str = "topo"
    pair_type: str = "point-polygon"
    per_class: int = 500
    max_attempts: int = 200

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        if self.pair_type not in PAIR_TYPES:
            raise ConfigError(f"unknown pair type {self.pair_type!r}; expected one of {', '.join(PAIR_TYPES)}")
        if self.task == "topo":
            class_names("topo", self.pair_type)
        if self.per_class < 1:
            raise ConfigError("per_class must be positive")


@dataclass
class LabeledPairSet:
    task: str
    pair_type: str
    classes: Tuple[str, ...]
    samples: List[PairSample]
    splits: List[str]
    meta: Dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    def labels(self) -> np.ndarray:
        vals = [s.label(self.task) for s in self.samples]
        return np.array(vals, dtype=float if self.task == "distance" else int)

    def indices(self, split: str) -> np.ndarray:
        return np.array([i for i, s in enumerate(self.splits) if s == split], dtype=int)

    def histogram(self) -> Dict[str, int]:
        if self.task == "distance":
            return {"pairs": len(self.samples)}
        counts = np.bincount(self.labels(), minlength=len(self.classes))
        return {name: int(c) for name, c in zip(self.classes, counts)}


def _accept(task: str, ptype: str, k: Optional[int], a: Geometry, b: Geometry) -> Optional[PairSample]:
    """Re-derive the label from the geometries; None when it does not match."""
    if not (_in_unit_box(a) and _in_unit_box(b)):
        return None
    if task == "topo":
        try:
            label = topo_label(a, b)
        except UnsupportedPair:
            return None
        return PairSample(a, b, topo_label=label) if label == k else None
    if task == "direction":
        try:
            label = dir_label(a, b)
        except CoincidentCentroids:
            return None
        return PairSample(a, b, dir_label=label) if label == k else None
    return PairSample(a, b, dist_label=dist_label(a, b))


def _generate_one(cfg: GenConfig, seed: int, k: int, i: int) -> PairSample:
    rng = np.random.default_rng([seed, k, i])
    names = class_names(cfg.task, cfg.pair_type)
    for _ in range(cfg.max_attempts):
        try:
            if cfg.task == "topo":
                a, b = _build_topo(cfg.pair_type, names[k], rng)
            elif cfg.task == "direction":
                a, b = _build_direction(cfg.pair_type, k, rng)
            else:
                a, b = _build_distance(cfg.pair_type, rng)
        except ValidationError:
            continue
        got = _accept(cfg.task, cfg.pair_type, k if names else None, a, b)
        if got is not None:
            return got
    label = names[k] if names else "distance"
    raise GenerationBudgetExceeded(
        f"no valid {cfg.pair_type} pair for class {label!r} after {cfg.max_attempts} attempts"
    )


def _split_tags(n: int, rng: np.random.Generator) -> List[str]:
    n_train = int(round(SPLIT_RATIOS[0] * n))
    n_val = int(round(SPLIT_RATIOS[1] * n))
    tags = ["train"] * n_train + ["val"] * n_val + ["test"] * (n - n_train - n_val)
    order = rng.permutation(n)
    return [tags[j] for j in np.argsort(order)]


def gen_pairs(cfg: GenConfig, seed: int) -> LabeledPairSet:
    """Balanced labeled pairs with stratified 60:20:20 splits.

    Topology and direction produce exactly ``per_class`` pairs per class.
    Distance has no classes and produces ``2 * per_class`` pairs.
    Pair ``i`` of class ``k`` draws from its own stream seeded by
    ``(seed, k, i)``, so the output does not depend on generation order.
    """
    names = class_names(cfg.task, cfg.pair_type)
    groups = range(len(names)) if names else [0]
    count = cfg.per_class if names else 2 * cfg.per_class
    samples: List[PairSample] = []
    splits: List[str] = []
    for k in groups:
        block = [_generate_one(cfg, seed, k, i) for i in range(count)]
        samples.extend(block)
        splits.extend(_split_tags(count, np.random.default_rng([seed, 10_000 + k])))
    meta = {"task": cfg.task, "pair_type": cfg.pair_type, "per_class": cfg.per_class, "seed": seed}
    return LabeledPairSet(cfg.task, cfg.pair_type, names, samples, splits, meta)


def verify_labels(ds: LabeledPairSet) -> List[int]:
    """Indices of samples whose stored label the predicates do not reproduce."""
    bad = []
    for i, s in enumerate(ds.samples):
        if ds.task == "topo":
            ok = topo_label(s.g_a, s.g_b) == s.topo_label
        elif ds.task == "direction":
            ok = dir_label(s.g_a, s.g_b) == s.dir_label
        else:
            ok = dist_label(s.g_a, s.g_b) == s.dist_label
        if not ok:
            bad.append(i)
    return bad


# ------------------------------------------------------- heads and losses


def head_logits(tape: Tape, va: Var, vb: Var, p: Dict[str, Var]) -> Var:
    """Class logits for a batch of embedding pairs: MLP on [va; vb]."""
    return head_forward(tape, va, vb, p)


def cross_entropy(logits, labels) -> Tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient with respect to the logits."""
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    labels = np.atleast_1d(np.asarray(labels, dtype=int))
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise ValueError("label out of range")
    tape = Tape()
    x = Var(logits)
    loss = tape.cross_entropy(x, labels)
    tape.backward(loss)
    return float(loss.data), x.grad


def mse_distance(va, vb, dist) -> Tuple[float, np.ndarray, np.ndarray]:
    """Mean of (||va - vb|| - dist)^2 with gradients for va and vb."""
    a = Var(np.atleast_2d(np.asarray(va, dtype=float)))
    b = Var(np.atleast_2d(np.asarray(vb, dtype=float)))
    tape = Tape()
    pred = tape.row_norm(tape.sub(a, b))
    loss = tape.mse(pred, np.atleast_1d(np.asarray(dist, dtype=float)))
    tape.backward(loss)
    return float(loss.data), a.grad, b.grad


# ----------------------------------------------------------------- metrics


def classification_metrics(preds, labels, n_classes: Optional[int] = None) -> Dict[str, float]:
    """Accuracy plus macro precision, recall and F1 over classes present in ``labels``."""
    preds = np.asarray(preds, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if preds.size == 0 or labels.size == 0:
        raise EmptyInput("metrics need at least one prediction")
    if preds.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    n = n_classes or int(max(preds.max(), labels.max())) + 1
    present = np.unique(labels)
    missing = sorted(set(range(n)) - set(present.tolist()))
    if missing:
        warnings.warn(f"classes {missing} absent from labels; excluded from macro averages")
    precision, recall, f1 = [], [], []
    for c in present:
        tp = np.sum((preds == c) & (labels == c))
        fp = np.sum((preds == c) & (labels != c))
        fn = np.sum((preds != c) & (labels == c))
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(2 * p * r / (p + r) if p + r else 0.0)
    return {
        "accuracy": float(np.mean(preds == labels)),
        "precision": float(np.mean(precision)),
        "recall": float(np.mean(recall)),
        "f1": float(np.mean(f1)),
    }


def regression_metrics(preds, labels) -> Dict[str, float]:
    preds = np.asarray(preds, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if preds.size == 0 or labels.size == 0:
        raise EmptyInput("metrics need at least one prediction")
    if preds.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    return {"mae": float(np.mean(np.abs(preds - labels)))}


def metrics(preds, labels, task: str = "topo", n_classes: Optional[int] = None) -> Dict[str, float]:
    if task == "distance":
        return regression_metrics(preds, labels)
    return classification_metrics(preds, labels, n_classes)
