"""Core domain types: geometry, attribute schemas, features and the (geo)graph."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Iterator, Literal, Sequence

import numpy as np

from .errors import AdjacencyError, GeoGraphError, GraphError

FieldKind = Literal["integer", "real", "text", "logical"]
FIELD_KINDS = ("integer", "real", "text", "logical")
Mode = Literal["planar", "geographic"]

NodeId = Hashable
Coord = tuple[float, float]


def id_sort_key(node_id: Any) -> tuple:
    """Total order over mixed int/str node ids: ints first, then strings."""
    if isinstance(node_id, (int, np.integer)) and not isinstance(node_id, bool):
        return (0, int(node_id), "")
    return (1, 0, str(node_id))


@dataclass(frozen=True)
class GeoPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeoGraphError(f"non-finite coordinate ({self.x}, {self.y})")

    def check_geographic(self) -> None:
        if not (-180.0 <= self.x <= 180.0 and -90.0 <= self.y <= 90.0):
            raise GeoGraphError(
                f"coordinate ({self.x}, {self.y}) outside lon/lat range")

    def as_tuple(self) -> Coord:
        return (self.x, self.y)


@dataclass(frozen=True)
class PolyLine:
    """One or more vertex chains; ``bbox`` is derived, never passed in."""

    parts: tuple[tuple[Coord, ...], ...]
    bbox: tuple[float, float, float, float] = field(init=False)

    def __init__(self, parts: Iterable[Iterable[Sequence[float]]]):
        frozen = tuple(
            tuple((float(p[0]), float(p[1])) for p in part) for part in parts)
        if not frozen:
            raise GeoGraphError("polyline needs at least one part")
        for k, part in enumerate(frozen):
            if len(part) < 2:
                raise GeoGraphError(f"polyline part {k} has fewer than 2 points")
            for x, y in part:
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise GeoGraphError(f"non-finite coordinate ({x}, {y})")
        xs = [x for part in frozen for x, _ in part]
        ys = [y for part in frozen for _, y in part]
        object.__setattr__(self, "parts", frozen)
        object.__setattr__(self, "bbox", (min(xs), min(ys), max(xs), max(ys)))

    def points(self) -> Iterator[Coord]:
        for part in self.parts:
            yield from part

    def check_geographic(self) -> None:
        for x, y in self.points():
            GeoPoint(x, y).check_geographic()

    @property
    def num_points(self) -> int:
        return sum(len(p) for p in self.parts)

    def length(self) -> float:
        return sum(part_length(p) for p in self.parts)


def part_length(part: Sequence[Coord]) -> float:
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(part, part[1:]))


@dataclass(frozen=True)
class Field:
    name: str
    kind: FieldKind
    width: int
    decimals: int = 0

    def __post_init__(self):
        if not self.name or len(self.name) > 10 or not self.name.isascii():
            raise GeoGraphError(
                f"field name {self.name!r} must be 1-10 ASCII characters")
        if self.kind not in FIELD_KINDS:
            raise GeoGraphError(f"unknown field kind {self.kind!r}")
        if not 1 <= self.width <= 254:
            raise GeoGraphError(f"field {self.name}: width {self.width} not in 1..254")
        if self.decimals < 0 or (self.kind != "real" and self.decimals != 0):
            raise GeoGraphError(
                f"field {self.name}: decimals must be 0 unless kind is real")
        if self.kind == "real" and self.decimals > self.width - 2 and self.decimals:
            raise GeoGraphError(f"field {self.name}: decimals do not fit width")
        if self.kind == "logical" and self.width != 1:
            raise GeoGraphError(f"field {self.name}: logical fields have width 1")


@dataclass(frozen=True)
class FieldSchema:
    fields: tuple[Field, ...]

    def __init__(self, fields: Iterable[Field]):
        fields = tuple(fields)
        seen: set[str] = set()
        for f in fields:
            key = f.name.casefold()
            if key in seen:
                raise GeoGraphError(f"duplicate field name {f.name!r}")
            seen.add(key)
        object.__setattr__(self, "fields", fields)

    def __len__(self) -> int:
        return len(self.fields)

    def __iter__(self) -> Iterator[Field]:
        return iter(self.fields)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.fields]

    def index(self, name: str) -> int:
        """Case-insensitive field lookup."""
        key = name.casefold()
        for i, f in enumerate(self.fields):
            if f.name.casefold() == key:
                return i
        raise KeyError(name)


def value_matches_kind(value: Any, kind: str) -> bool:
    if value is None:
        return True
    if kind == "integer":
        return isinstance(value, (int, np.integer)) and not isinstance(value, bool)
    if kind == "real":
        return (isinstance(value, (int, float, np.integer, np.floating))
                and not isinstance(value, bool))
    if kind == "text":
        return isinstance(value, str)
    return isinstance(value, bool)


Geometry = GeoPoint | PolyLine | None


@dataclass(frozen=True)
class Feature:
    geometry: Geometry
    attributes: tuple[Any, ...] = ()

    def __init__(self, geometry: Geometry, attributes: Iterable[Any] = ()):
        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "attributes", tuple(attributes))


@dataclass(frozen=True)
class FeatureCollection:
    schema: FieldSchema
    geometry_kind: Literal["point", "polyline"]
    features: tuple[Feature, ...]
    mode: Mode = "planar"

    def __init__(self, schema: FieldSchema, geometry_kind: str,
                 features: Iterable[Feature] = (), mode: Mode = "planar"):
        if geometry_kind not in ("point", "polyline"):
            raise GeoGraphError(f"unknown geometry kind {geometry_kind!r}")
        if mode not in ("planar", "geographic"):
            raise GeoGraphError(f"unknown coordinate mode {mode!r}")
        gtype = GeoPoint if geometry_kind == "point" else PolyLine
        features = tuple(features)
        for i, feat in enumerate(features):
            if feat.geometry is not None and not isinstance(feat.geometry, gtype):
                raise GeoGraphError(
                    f"feature {i}: geometry is not a {geometry_kind}")
            if len(feat.attributes) != len(schema):
                raise GeoGraphError(
                    f"feature {i}: {len(feat.attributes)} attributes for "
                    f"{len(schema)} fields")
            for fld, value in zip(schema, feat.attributes):
                if not value_matches_kind(value, fld.kind):
                    raise GeoGraphError(
                        f"feature {i}: value {value!r} is not {fld.kind} "
                        f"(field {fld.name})")
            if mode == "geographic" and feat.geometry is not None:
                feat.geometry.check_geographic()
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "geometry_kind", geometry_kind)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "mode", mode)

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self) -> Iterator[Feature]:
        return iter(self.features)

    def records(self) -> Iterator[dict[str, Any]]:
        names = self.schema.names
        for feat in self.features:
            yield dict(zip(names, feat.attributes))


@dataclass
class Node:
    location: GeoPoint
    attributes: dict[str, Any] = field(default_factory=dict)


@dataclass
class Edge:
    u: NodeId
    v: NodeId
    weight: float = 1.0
    attributes: dict[str, Any] = field(default_factory=dict)


class GeoGraph:
    """Undirected simple graph whose nodes carry a location.

    Edges are keyed by the unordered endpoint pair; ``(u, v)`` is stored with
    ``u`` before ``v`` under :func:`id_sort_key`. Build it single-threaded,
    then treat it as read-only.
    """

    def __init__(self):
        self.nodes: dict[NodeId, Node] = {}
        self._edges: dict[tuple[NodeId, NodeId], Edge] = {}
        self._adj: dict[NodeId, set[NodeId]] = {}
        self.meta: dict[str, Any] = {}

    def __repr__(self):
        return f"GeoGraph({self.number_of_nodes()} nodes, {self.number_of_edges()} edges)"

    @staticmethod
    def edge_key(u: NodeId, v: NodeId) -> tuple[NodeId, NodeId]:
        return (u, v) if id_sort_key(u) <= id_sort_key(v) else (v, u)

    def add_node(self, node_id: NodeId, location: GeoPoint | Sequence[float],
                 attributes: dict[str, Any] | None = None) -> "GeoGraph":
        if not isinstance(location, GeoPoint):
            location = GeoPoint(float(location[0]), float(location[1]))
        if node_id in self.nodes:
            raise GraphError(f"duplicate node id {node_id!r}")
        self.nodes[node_id] = Node(location, dict(attributes or {}))
        self._adj[node_id] = set()
        return self

    def add_edge(self, u: NodeId, v: NodeId, weight: float = 1.0,
                 attributes: dict[str, Any] | None = None) -> "GeoGraph":
        for end in (u, v):
            if end not in self.nodes:
                raise GraphError(f"unknown node id {end!r}")
        if u == v:
            raise GraphError(f"self-loop on node {u!r} rejected")
        weight = float(weight)
        if not math.isfinite(weight):
            raise GraphError(f"edge ({u!r}, {v!r}) has non-finite weight")
        a, b = self.edge_key(u, v)
        self._edges[(a, b)] = Edge(a, b, weight, dict(attributes or {}))
        self._adj[a].add(b)
        self._adj[b].add(a)
        return self

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        return self.edge_key(u, v) in self._edges

    def edge(self, u: NodeId, v: NodeId) -> Edge:
        return self._edges[self.edge_key(u, v)]

    def neighbors(self, node_id: NodeId) -> set[NodeId]:
        return self._adj[node_id]

    def node_ids(self) -> list[NodeId]:
        """Node ids in ascending order."""
        return sorted(self.nodes, key=id_sort_key)

    def edges(self) -> list[Edge]:
        """Edges in ascending (u, v) order."""
        keys = sorted(self._edges,
                      key=lambda k: (id_sort_key(k[0]), id_sort_key(k[1])))
        return [self._edges[k] for k in keys]

    def number_of_nodes(self) -> int:
        return len(self.nodes)

    def number_of_edges(self) -> int:
        return len(self._edges)

    def copy(self) -> "GeoGraph":
        g = GeoGraph()
        for nid, node in self.nodes.items():
            g.add_node(nid, node.location, node.attributes)
        for e in self._edges.values():
            g.add_edge(e.u, e.v, e.weight, e.attributes)
        g.meta = dict(self.meta)
        return g


def graph_add_edge(g: GeoGraph, u: NodeId, v: NodeId, weight: float = 1.0,
                   attrs: dict[str, Any] | None = None) -> GeoGraph:
    return g.add_edge(u, v, weight, attrs)


def graph_bbox(g: GeoGraph) -> tuple[float, float, float, float]:
    if not g.nodes:
        raise GraphError("bounding box of an empty graph")
    xs = [n.location.x for n in g.nodes.values()]
    ys = [n.location.y for n in g.nodes.values()]
    return (min(xs), min(ys), max(xs), max(ys))


@dataclass(frozen=True)
class AdjacencyMatrix:
    ids: tuple[int, ...]
    entries: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)

    def edges(self) -> list[tuple[int, int]]:
        """Id pairs (row id, column id) of the upper triangle."""
        rows, cols = np.nonzero(np.triu(self.entries, 1))
        return [(self.ids[i], self.ids[j]) for i, j in zip(rows, cols)]


def validate_adjacency(entries, ids: Sequence[int] | None = None) -> AdjacencyMatrix:
    """Check a square symmetric 0/1 matrix with zero diagonal.

    Errors name the first offending cell in row-major order. ``ids`` defaults
    to ``0..n-1``.
    """
    rows = [list(r) for r in entries]
    n = len(rows)
    for i, row in enumerate(rows):
        if len(row) != n:
            raise AdjacencyError(
                f"matrix is not square: row {i} has {len(row)} entries, expected {n}")
    mat = np.zeros((n, n), dtype=np.uint8)
    for i, row in enumerate(rows):
        for j, value in enumerate(row):
            if isinstance(value, bool) or value not in (0, 1):
                raise AdjacencyError(f"entry ({i},{j}) = {value!r} is not 0 or 1")
            mat[i, j] = int(value)
    for i in range(n):
        if mat[i, i]:
            raise AdjacencyError(f"nonzero diagonal at ({i},{i})")
        for j in range(n):
            if mat[i, j] != mat[j, i]:
                raise AdjacencyError(
                    f"asymmetry at ({j},{i}) vs ({i},{j})" if i < j else
                    f"asymmetry at ({i},{j}) vs ({j},{i})")
    if ids is None:
        ids = range(n)
    ids = tuple(int(i) for i in ids)
    if len(ids) != n:
        raise AdjacencyError(f"{len(ids)} ids for a {n}x{n} matrix")
    if len(set(ids)) != n:
        dup = sorted(i for i in set(ids) if ids.count(i) > 1)
        raise AdjacencyError(f"duplicate ids {dup}")
    return AdjacencyMatrix(ids, mat)


def adjacency_of(g: GeoGraph, ids: Sequence[NodeId]) -> np.ndarray:
    """0/1 matrix of ``g`` with rows/columns in ``ids`` order."""
    pos = {nid: k for k, nid in enumerate(ids)}
    mat = np.zeros((len(ids), len(ids)), dtype=np.uint8)
    for e in g.edges():
        i, j = pos[e.u], pos[e.v]
        mat[i, j] = mat[j, i] = 1
    return mat
