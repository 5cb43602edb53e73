"""Graph -> GIS layers: point/line feature collections, shapefiles and GeoJSON.

GeoJSON doubles as the graph interchange format of the command-line tool.
"""

from __future__ import annotations

import bisect
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import GeoGraphError, InvariantViolation
from .geo_model import (Feature, FeatureCollection, Field, FieldSchema, GeoGraph, GeoPoint,
                        PolyLine)
from .shapefile_io import atomic_write, write_shapefile

log = logging.getLogger(__name__)

REAL_DECIMALS = 15
REAL_MIN_WIDTH = 24
INT_MIN_WIDTH = 10
EDGE_RESERVED = ("source", "target", "weight")


@dataclass(frozen=True)
class ExportStyle:
    """Class breaks turned into an integer ``class`` attribute.

    A value gets class k when exactly k breaks are <= value.
    """

    node_metric: str | None = None
    edge_metric: str | None = None
    breaks: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        b = tuple(float(x) for x in self.breaks)
        if any(not math.isfinite(x) for x in b):
            raise GeoGraphError("class breaks must be finite")
        if any(a >= c for a, c in zip(b, b[1:])):
            raise GeoGraphError(f"class breaks must be strictly ascending: {list(b)}")
        object.__setattr__(self, "breaks", b)

    def classify(self, value: Any) -> int | None:
        if value is None or isinstance(value, (bool, str)):
            return None
        return bisect.bisect_right(self.breaks, float(value))


def apply_style(g: GeoGraph, style: ExportStyle) -> GeoGraph:
    out = g.copy()
    if style.node_metric:
        for node in out.nodes.values():
            node.attributes["class"] = style.classify(node.attributes.get(style.node_metric))
    if style.edge_metric:
        for e in out.edges():
            value = e.weight if style.edge_metric == "weight" else e.attributes.get(style.edge_metric)
            e.attributes["class"] = style.classify(value)
    return out


# ------------------------------------------------------------ schemas

def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    return value


def _is_integral(v: Any) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, int):
        return True
    return isinstance(v, float) and v.is_integer() and abs(v) < 1e15


def dbf_field_names(names: Sequence[str]) -> list[str]:
    """10-character DBF names for ``names``; collisions are an error."""
    out = []
    owners: dict[str, list[str]] = {}
    for name in names:
        if not name.isascii() or not name:
            raise GeoGraphError(f"attribute name {name!r} cannot be a DBF field name")
        short = name[:10]
        if short != name:
            log.warning("attribute %r stored as DBF field %r", name, short)
        owners.setdefault(short.casefold(), []).append(name)
        out.append(short)
    clashes = {k: v for k, v in owners.items() if len(v) > 1}
    if clashes:
        detail = "; ".join(" / ".join(v) for v in clashes.values())
        raise GeoGraphError(f"attribute names collide after 10-character DBF truncation: {detail}")
    return out


def infer_field(name: str, values: Iterable[Any]) -> tuple[Field, Any]:
    """Field for a column and a converter applied to every cell."""
    present = [_plain(v) for v in values if v is not None]
    if present and all(isinstance(v, bool) for v in present):
        return Field(name, "logical", 1), lambda v: None if v is None else bool(v)
    numeric = present and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                              for v in present)
    if numeric and all(_is_integral(v) for v in present):
        width = max([INT_MIN_WIDTH] + [len(str(int(v))) for v in present])
        return (Field(name, "integer", _fit(name, width)),
                lambda v: None if v is None else int(_plain(v)))
    if numeric:
        if any(not math.isfinite(float(v)) for v in present):
            raise GeoGraphError(f"attribute {name}: non-finite value")
        width = max([REAL_MIN_WIDTH] + [len(f"{float(v):.{REAL_DECIMALS}f}") for v in present])
        return (Field(name, "real", _fit(name, width), REAL_DECIMALS),
                lambda v: None if v is None else float(_plain(v)))
    texts = ["" if v is None else (v if isinstance(v, str) else _text(v)) for v in present]
    width = max([1] + [len(t.encode("utf-8", errors="surrogateescape")) for t in texts])
    return (Field(name, "text", _fit(name, width)),
            lambda v: None if v is None else (v if isinstance(v, str) else _text(_plain(v))))


def _text(v: Any) -> str:
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def _fit(name: str, width: int) -> int:
    if width > 254:
        raise GeoGraphError(f"attribute {name}: values need {width} characters, DBF limit is 254")
    return width


def _build(names: Sequence[str], rows: list[list[Any]]) -> tuple[FieldSchema, list[tuple]]:
    short = dbf_field_names(names)
    fields, converters = [], []
    for k, name in enumerate(short):
        fld, conv = infer_field(name, (r[k] for r in rows))
        fields.append(fld)
        converters.append(conv)
    converted = [tuple(conv(v) for conv, v in zip(converters, r)) for r in rows]
    return FieldSchema(fields), converted


def _attribute_order(dicts: Iterable[dict[str, Any]], skip) -> list[str]:
    names: dict[str, None] = {}
    for d in dicts:
        for k in d:
            if not skip(k):
                names.setdefault(k, None)
    return list(names)


def nodes_to_features(g: GeoGraph) -> FeatureCollection:
    """One point per node: ``id`` plus every node attribute."""
    ids = g.node_ids()
    attr_names = _attribute_order((g.nodes[i].attributes for i in ids),
                                  skip=lambda k: k.casefold() == "id")
    rows = [[nid] + [g.nodes[nid].attributes.get(k) for k in attr_names] for nid in ids]
    schema, converted = _build(["id"] + attr_names, rows)
    feats = [Feature(g.nodes[nid].location, vals) for nid, vals in zip(ids, converted)]
    return FeatureCollection(schema, "point", feats, mode=g.meta.get("mode", "planar"))


def edges_to_features(g: GeoGraph) -> FeatureCollection:
    """One straight 2-point polyline per edge, ordered by (u, v)."""
    edges = g.edges()
    attr_names = _attribute_order((e.attributes for e in edges), skip=lambda k: False)
    reserved = [k for k in attr_names if k.casefold() in EDGE_RESERVED]
    if reserved:
        raise GeoGraphError(f"edge attributes use reserved names: {reserved}")
    rows, geoms = [], []
    for e in edges:
        try:
            a, b = g.nodes[e.u].location, g.nodes[e.v].location
        except KeyError as exc:
            raise InvariantViolation(f"edge endpoint {exc} has no node") from None
        geoms.append(PolyLine([[(a.x, a.y), (b.x, b.y)]]))
        rows.append([e.u, e.v, e.weight] + [e.attributes.get(k) for k in attr_names])
    if not edges:
        id_field = "integer" if all(isinstance(i, int) for i in g.nodes) else "text"
        width = INT_MIN_WIDTH if id_field == "integer" else 1
        schema = FieldSchema([Field("source", id_field, width), Field("target", id_field, width),
                              Field("weight", "real", REAL_MIN_WIDTH, REAL_DECIMALS)])
        return FeatureCollection(schema, "polyline", [], mode=g.meta.get("mode", "planar"))
    schema, converted = _build(list(EDGE_RESERVED) + attr_names, rows)
    if schema.fields[2].kind != "real":
        # keep weight a real column even when every weight is integral
        fields = list(schema.fields)
        fields[2] = Field("weight", "real", max(REAL_MIN_WIDTH, fields[2].width), REAL_DECIMALS)
        schema = FieldSchema(fields)
        converted = [r[:2] + (float(r[2]),) + r[3:] for r in converted]
    feats = [Feature(geom, vals) for geom, vals in zip(geoms, converted)]
    return FeatureCollection(schema, "polyline", feats, mode=g.meta.get("mode", "planar"))


def features_with_geometry(c: FeatureCollection, g: GeoGraph) -> FeatureCollection:
    """Original feature geometry (node id = feature ordinal) carrying node attributes."""
    nodes = nodes_to_features(g)
    feats = [Feature(c.features[nid].geometry, f.attributes)
             for nid, f in zip(g.node_ids(), nodes.features)]
    return FeatureCollection(nodes.schema, c.geometry_kind, feats, mode=c.mode)


# ------------------------------------------------------------ GeoJSON

def _json_value(v: Any) -> Any:
    v = _plain(v)
    if isinstance(v, float) and not math.isfinite(v):
        raise GeoGraphError("non-finite attribute values cannot be written to GeoJSON")
    return v


def to_geojson(g: GeoGraph) -> str:
    """FeatureCollection: Point per node (feature id = node id), LineString per edge."""
    features = []
    for nid in g.node_ids():
        node = g.nodes[nid]
        features.append({
            "type": "Feature",
            "id": _json_value(nid),
            "geometry": {"type": "Point", "coordinates": [node.location.x, node.location.y]},
            "properties": {k: _json_value(v) for k, v in node.attributes.items()},
        })
    for e in g.edges():
        a, b = g.nodes[e.u].location, g.nodes[e.v].location
        props = {k: _json_value(v) for k, v in e.attributes.items()}
        reserved = [k for k in props if k in EDGE_RESERVED]
        if reserved:
            raise GeoGraphError(f"edge attributes use reserved names: {reserved}")
        props.update(source=_json_value(e.u), target=_json_value(e.v), weight=e.weight)
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[a.x, a.y], [b.x, b.y]]},
            "properties": props,
        })
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, sort_keys=True, allow_nan=False, separators=(",", ":")) + "\n"


def from_geojson(text: str) -> GeoGraph:
    """Inverse of :func:`to_geojson`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeoGraphError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise GeoGraphError("GeoJSON root must be a FeatureCollection")
    g = GeoGraph()
    lines = []
    for k, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        props = dict(feat.get("properties") or {})
        if geom.get("type") == "Point":
            if "id" not in feat:
                raise GeoGraphError(f"feature {k}: node without an id")
            x, y = geom["coordinates"][:2]
            g.add_node(feat["id"], GeoPoint(float(x), float(y)), props)
        elif geom.get("type") == "LineString":
            lines.append((k, props))
        else:
            raise GeoGraphError(f"feature {k}: unsupported geometry {geom.get('type')!r}")
    for k, props in lines:
        try:
            u, v = props.pop("source"), props.pop("target")
        except KeyError:
            raise GeoGraphError(f"feature {k}: edge without source/target") from None
        g.add_edge(u, v, float(props.pop("weight", 1.0)), props)
    return g


def read_graph(path: str | os.PathLike) -> GeoGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise GeoGraphError(f"{path}: file not found") from None
    try:
        return from_geojson(text)
    except GeoGraphError as exc:
        raise GeoGraphError(f"{path}: {exc}") from None


def write_geojson(g: GeoGraph, path: str | os.PathLike) -> None:
    atomic_write(path, to_geojson(g).encode("utf-8"))


def write_graph(g: GeoGraph, stem: str | os.PathLike,
                formats: Sequence[str] = ("shp", "geojson")) -> list[Path]:
    """Write ``<stem>_nodes``/``<stem>_edges`` shapefiles and/or ``<stem>.geojson``."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if "shp" in formats:
        nodes = stem.with_name(stem.name + "_nodes")
        edges = stem.with_name(stem.name + "_edges")
        write_shapefile(nodes_to_features(g), nodes)
        write_shapefile(edges_to_features(g), edges)
        written += [p.with_name(p.name + ".shp") for p in (nodes, edges)]
    if "geojson" in formats:
        path = stem.with_name(stem.name + ".geojson")
        write_geojson(g, path)
        written.append(path)
    return written
