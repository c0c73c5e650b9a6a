"""Exception hierarchy shared across the package."""


class GeoFourierError(Exception):
    """Base class for all package errors."""


class ParseError(GeoFourierError):
    pass


class UnsupportedGeometry(GeoFourierError):
    pass


class ValidationError(GeoFourierError):
    pass


class DegenerateBBox(GeoFourierError):
    pass


class EmptyResult(GeoFourierError):
    pass


class TriangulationError(GeoFourierError):
    pass


class DegenerateSegment(GeoFourierError):
    pass


class DegenerateTriangle(GeoFourierError):
    pass


class InvalidRange(GeoFourierError):
    pass


class TooFew(GeoFourierError):
    pass


class NoConvergence(GeoFourierError):
    pass


class ShapeMismatch(GeoFourierError):
    pass


class UnsupportedPair(GeoFourierError):
    pass


class CoincidentCentroids(GeoFourierError):
    pass


class GenerationBudgetExceeded(GeoFourierError):
    pass


class EmptyInput(GeoFourierError):
    pass


class ConfigError(GeoFourierError):
    pass


class DataMismatch(GeoFourierError):
    pass


class DivergedTraining(GeoFourierError):
    pass


class CheckpointMismatch(GeoFourierError):
    pass
