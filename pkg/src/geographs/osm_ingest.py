"""OSM XML ingestion: parse, split ways at crossroads, merge segments into streets."""

from __future__ import annotations

import io
import os
import xml.etree.ElementTree as ET
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .errors import OsmError
from .geo_model import Feature, FeatureCollection, Field, FieldSchema, GeoPoint, PolyLine
from .graph_extract import Connection

TagFilter = Callable[[Mapping[str, str]], bool]


@dataclass(frozen=True)
class OsmNode:
    osm_id: int
    location: GeoPoint


@dataclass(frozen=True)
class OsmWay:
    osm_id: int
    node_refs: tuple[int, ...]
    tags: dict[str, str] = field(default_factory=dict, hash=False, compare=True)

    @property
    def closed(self) -> bool:
        return len(self.node_refs) > 2 and self.node_refs[0] == self.node_refs[-1]


@dataclass(frozen=True)
class WaySegment:
    way_id: int
    source: int
    target: int
    node_refs: tuple[int, ...]
    geometry: PolyLine
    name: str | None
    closed: bool = False
    label: str | None = None


def normalize_name(name: str | None) -> str | None:
    if name is None:
        return None
    norm = " ".join(name.casefold().split())
    return norm or None


def has_highway(tags: Mapping[str, str]) -> bool:
    return "highway" in tags


def parse_tag_filter(expr: str | None) -> TagFilter:
    """Build a predicate from ``key``, ``key=value`` or ``key=v1|v2``.

    Several clauses may be joined with ``,`` (all must hold). ``*`` keeps
    every way.
    """
    if expr is None or not expr.strip():
        return has_highway
    if expr.strip() == "*":
        return lambda tags: True
    clauses = []
    for clause in expr.split(","):
        clause = clause.strip()
        if "=" in clause:
            key, values = clause.split("=", 1)
            clauses.append((key.strip(), {v.strip() for v in values.split("|")}))
        else:
            clauses.append((clause, None))

    def predicate(tags: Mapping[str, str]) -> bool:
        for key, values in clauses:
            if key not in tags or (values is not None and tags[key] not in values):
                return False
        return True

    return predicate


def parse_osm(source: bytes | str | os.PathLike | io.IOBase
              ) -> tuple[list[OsmNode], list[OsmWay]]:
    """Read ``<node>`` and ``<way>`` elements from an OSM XML document.

    ``source`` is raw bytes, a path, or a binary file object.
    """
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    try:
        root = ET.parse(source).getroot()
    except ET.ParseError as exc:
        raise OsmError(f"malformed OSM XML: {exc}") from None
    if root.tag != "osm":
        raise OsmError(f"root element is <{root.tag}>, expected <osm>")

    nodes: dict[int, OsmNode] = {}
    ways: list[OsmWay] = []
    way_ids: set[int] = set()
    for el in root:
        if el.tag == "node":
            try:
                nid = int(el.attrib["id"])
                lat, lon = float(el.attrib["lat"]), float(el.attrib["lon"])
            except (KeyError, ValueError) as exc:
                raise OsmError(f"bad <node> element {el.attrib}: {exc}") from None
            if nid in nodes:
                raise OsmError(f"duplicate node id {nid}")
            nodes[nid] = OsmNode(nid, GeoPoint(lon, lat))
        elif el.tag == "way":
            try:
                wid = int(el.attrib["id"])
                refs = tuple(int(nd.attrib["ref"]) for nd in el.iter("nd"))
            except (KeyError, ValueError) as exc:
                raise OsmError(f"bad <way> element {el.attrib}: {exc}") from None
            if wid in way_ids:
                raise OsmError(f"duplicate way id {wid}")
            way_ids.add(wid)
            tags = {t.attrib["k"]: t.attrib.get("v", "") for t in el.iter("tag")
                    if "k" in t.attrib}
            ways.append(OsmWay(wid, refs, tags))

    for way in ways:
        missing = [r for r in way.node_refs if r not in nodes]
        if missing:
            raise OsmError(
                f"way {way.osm_id} references missing node(s) "
                f"{', '.join(map(str, missing))}")
        if len(way.node_refs) < 2:
            raise OsmError(f"way {way.osm_id} has fewer than 2 node refs")
    return list(nodes.values()), ways


def split_ways_at_crossroads(nodes: Iterable[OsmNode] | Mapping[int, OsmNode],
                             ways: Iterable[OsmWay],
                             highway_filter: TagFilter | None = has_highway
                             ) -> list[WaySegment]:
    """Cut every retained way at interior nodes that another retained way uses."""
    if not isinstance(nodes, Mapping):
        nodes = {n.osm_id: n for n in nodes}
    keep = highway_filter or (lambda tags: True)
    retained = [w for w in ways if keep(w.tags)]

    users: dict[int, set[int]] = defaultdict(set)
    for w in retained:
        for ref in w.node_refs:
            users[ref].add(w.osm_id)

    segments = []
    for w in retained:
        name = normalize_name(w.tags.get("name"))
        label = " ".join(w.tags["name"].split()) if name else None
        refs = w.node_refs
        cuts = [0] + [i for i in range(1, len(refs) - 1) if len(users[refs[i]]) >= 2]
        cuts.append(len(refs) - 1)
        for a, b in zip(cuts, cuts[1:]):
            piece = refs[a:b + 1]
            geom = PolyLine([[nodes[r].location.as_tuple() for r in piece]])
            segments.append(WaySegment(
                w.osm_id, piece[0], piece[-1], piece, geom, name,
                closed=len(piece) > 2 and piece[0] == piece[-1], label=label))
    return segments


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _merge_chains(segs: list[WaySegment]) -> list[list[tuple[float, float]]]:
    """Join segments end to end through nodes where exactly two of them meet."""
    ends: dict[int, list[int]] = defaultdict(list)
    for k, seg in enumerate(segs):
        ends[seg.source].append(k)
        ends[seg.target].append(k)
    used = [False] * len(segs)

    def walk(k: int, start: int) -> list[tuple[float, float]]:
        refs, coords = [], []
        node = start
        while True:
            used[k] = True
            seg = segs[k]
            pts = list(seg.geometry.parts[0])
            ids = list(seg.node_refs)
            if seg.source != node:
                pts.reverse()
                ids.reverse()
            coords.extend(pts if not coords else pts[1:])
            node = ids[-1]
            nxt = [j for j in ends[node] if not used[j]]
            if len(ends[node]) != 2 or not nxt:
                return coords
            k = nxt[0]

    chains = []
    for k, seg in enumerate(segs):
        if used[k]:
            continue
        for node in (seg.source, seg.target):
            if len(ends[node]) != 2:
                chains.append(walk(k, node))
                break
    for k, seg in enumerate(segs):
        if not used[k]:
            chains.append(walk(k, seg.source))
    return chains


def aggregate_streets(segments: list[WaySegment], nodes: Mapping[int, OsmNode] | None = None
                      ) -> tuple[FeatureCollection, list[Connection]]:
    """Merge segments into one feature per street.

    Same (normalized) name -> one feature; contiguous segments are chained
    into one part, disjoint pieces become separate parts. Unnamed
    segments are grouped by shared nodes. Features are ordered by the first
    segment that belongs to them. Two features connect iff they share an OSM
    node; the witness is that node's location (lowest shared id).
    """
    groups: list[list[int]] = []
    by_name: dict[str, int] = {}
    unnamed = [k for k, s in enumerate(segments) if s.name is None]

    ds = _DisjointSet(len(segments))
    node_owner: dict[int, int] = {}
    for k in unnamed:
        for ref in segments[k].node_refs:
            if ref in node_owner:
                ds.union(node_owner[ref], k)
            else:
                node_owner[ref] = k
    root_group: dict[int, int] = {}
    for k, seg in enumerate(segments):
        if seg.name is not None:
            if seg.name not in by_name:
                by_name[seg.name] = len(groups)
                groups.append([])
            groups[by_name[seg.name]].append(k)
        else:
            root = ds.find(k)
            if root not in root_group:
                root_group[root] = len(groups)
                groups.append([])
            groups[root_group[root]].append(k)

    labels = [segments[g[0]].label or segments[g[0]].name for g in groups]
    width = max([len((lab or "").encode("utf-8")) for lab in labels] + [1])
    schema = FieldSchema([Field("name", "text", min(width, 254)),
                          Field("n_segments", "integer", 10)])
    features = []
    node_features: dict[int, set[int]] = defaultdict(set)
    for fi, members in enumerate(groups):
        parts = _merge_chains([segments[k] for k in members])
        features.append(Feature(PolyLine(parts),
                                (labels[fi], len(members))))
        for k in members:
            for ref in segments[k].node_refs:
                node_features[ref].add(fi)

    shared: dict[tuple[int, int], int] = {}
    for ref in sorted(node_features):
        owners = sorted(node_features[ref])
        for a in range(len(owners)):
            for b in range(a + 1, len(owners)):
                shared.setdefault((owners[a], owners[b]), ref)

    lookup = {}
    for seg in segments:
        for ref, pt in zip(seg.node_refs, seg.geometry.parts[0]):
            lookup[ref] = pt
    conns = []
    for (i, j), ref in sorted(shared.items()):
        if nodes is not None and ref in nodes:
            witness = nodes[ref].location
        else:
            witness = GeoPoint(*lookup[ref])
        conns.append(Connection(i, j, witness))
    return FeatureCollection(schema, "polyline", features, mode="geographic"), conns


def osm_streets(source, highway_filter: TagFilter | None = has_highway
                ) -> tuple[FeatureCollection, list[Connection]]:
    """parse -> split -> aggregate in one call."""
    nodes, ways = parse_osm(source)
    node_map = {n.osm_id: n for n in nodes}
    segments = split_ways_at_crossroads(node_map, ways, highway_filter)
    return aggregate_streets(segments, node_map)
