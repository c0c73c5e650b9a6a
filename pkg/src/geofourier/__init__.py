"""Polymorphic geometry encoder built on closed-form 2D Fourier transforms.

Points, polylines and polygons are mapped to complex spectra on a shared
frequency grid, split into magnitude and phase, and fused by small MLPs
into fixed-width embeddings.
"""

from .frequency_grid import FrequencyGrid, build_grid, default_grid, geometric_frequencies
from .geometry import (
    BoundingBox,
    MultiPolygon,
    Point,
    Polygon,
    Polyline,
    centroid,
    normalize,
    parse_geometry,
    serialize,
)
from .spectral import ComplexSpectrum, cft_point, cft_polygon, cft_polyline, cft_segment, cft_triangle, encode_spectrum
from .triangulation import Segment, Triangle, triangulate

__all__ = [
    "BoundingBox",
    "ComplexSpectrum",
    "FrequencyGrid",
    "MultiPolygon",
    "Point",
    "Polygon",
    "Polyline",
    "Segment",
    "Triangle",
    "build_grid",
    "centroid",
    "cft_point",
    "cft_polygon",
    "cft_polyline",
    "cft_segment",
    "cft_triangle",
    "default_grid",
    "encode_spectrum",
    "geometric_frequencies",
    "normalize",
    "parse_geometry",
    "serialize",
    "triangulate",
]
