"""Exception hierarchy.

Everything derived from :class:`GeoGraphError` signals bad input (the CLI maps
it to exit code 1). :class:`InvariantViolation` signals a bug in this package
(exit code 2).
"""


class GeoGraphError(ValueError):
    """Invalid input data or a violated input contract."""


class GraphError(GeoGraphError):
    pass


class AdjacencyError(GeoGraphError):
    pass


class ShapefileError(GeoGraphError):
    pass


class UnsupportedShapeType(ShapefileError):
    def __init__(self, code: int):
        super().__init__(f"unsupported shape type {code}")
        self.code = code


class DbfError(ShapefileError):
    pass


class OsmError(GeoGraphError):
    pass


class InvariantViolation(RuntimeError):
    """An internal consistency check failed."""
