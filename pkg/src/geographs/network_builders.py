"""Threshold networks from time series and OD flows, and graphs from adjacency matrices."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import AdjacencyError, GeoGraphError
from .geo_model import (AdjacencyMatrix, FeatureCollection, GeoGraph, GeoPoint, NodeId,
                        id_sort_key, validate_adjacency)
from .graph_metrics import attach_metrics, degree

log = logging.getLogger(__name__)

MISSING_TOKENS = {"", "na", "nan", "null"}
DEFAULT_FLOW_THRESHOLD = 1000.0
MISSING_MIN_OVERLAP = 10


@dataclass(frozen=True)
class Threshold:
    """Strict lower bound: a pair qualifies iff its statistic is ``> value``."""

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise GeoGraphError(f"threshold must be finite, got {self.value}")

    def passes(self, stat: float) -> bool:
        return stat > self.value


def _as_threshold(tau: Threshold | float) -> Threshold:
    return tau if isinstance(tau, Threshold) else Threshold(float(tau))


@dataclass
class TimeSeriesSet:
    ids: list[NodeId]
    locations: dict[NodeId, GeoPoint]
    series: dict[NodeId, np.ndarray]
    cadence: str | None = None

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise GeoGraphError("duplicate series ids")
        lengths = set()
        for nid in self.ids:
            if nid not in self.locations:
                raise GeoGraphError(f"series {nid!r} has no location")
            if nid not in self.series:
                raise GeoGraphError(f"no series for id {nid!r}")
            self.series[nid] = _as_series(self.series[nid])
            lengths.add(self.series[nid].shape[0])
        if len(lengths) > 1:
            raise GeoGraphError(f"series lengths differ: {sorted(lengths)}")
        if lengths and lengths.pop() < 2:
            raise GeoGraphError("series need at least 2 samples")

    @property
    def length(self) -> int:
        return self.series[self.ids[0]].shape[0] if self.ids else 0

    def has_missing(self) -> bool:
        return any(np.isnan(s).any() for s in self.series.values())


def _as_series(values: Iterable[Any]) -> np.ndarray:
    return np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)


def _centered(x: np.ndarray) -> tuple[np.ndarray, float]:
    xc = x - x.mean()
    return xc, float(np.dot(xc, xc))


def _pearson_centered(xc: np.ndarray, ssx: float, yc: np.ndarray, ssy: float) -> float | None:
    if ssx == 0.0 or ssy == 0.0:
        return None
    r = float(np.dot(xc, yc)) / math.sqrt(ssx * ssy)
    return min(1.0, max(-1.0, r))


def pearson(x: Sequence[float | None], y: Sequence[float | None],
            min_overlap: int = 2) -> float | None:
    """Pearson r over indices where both values are present.

    Missing values are ``None`` or NaN. Returns None when fewer than
    ``min_overlap`` paired samples remain or either side has zero variance.
    """
    xa, ya = _as_series(x), _as_series(y)
    if xa.shape != ya.shape:
        raise GeoGraphError(f"series length mismatch: {xa.shape[0]} vs {ya.shape[0]}")
    if min_overlap < 2:
        raise GeoGraphError("min_overlap must be >= 2")
    mask = ~(np.isnan(xa) | np.isnan(ya))
    if int(mask.sum()) < min_overlap:
        return None
    if not mask.all():
        xa, ya = xa[mask], ya[mask]
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        return None
    xc, ssx = _centered(xa)
    yc, ssy = _centered(ya)
    return _pearson_centered(xc, ssx, yc, ssy)


def correlation_network(ts: TimeSeriesSet, tau: Threshold | float,
                        min_overlap: int | None = None) -> GeoGraph:
    """Edge {u, v} iff pearson(u, v) is defined and strictly above ``tau``.

    Zero-variance nodes stay as isolated nodes and are listed in
    ``g.meta["zero_variance"]``.
    """
    tau = _as_threshold(tau)
    if not -1.0 <= tau.value <= 1.0:
        raise GeoGraphError(f"correlation threshold {tau.value} outside [-1, 1]")
    if min_overlap is None:
        min_overlap = MISSING_MIN_OVERLAP if ts.has_missing() else ts.length
    if min_overlap < 2:
        raise GeoGraphError("min_overlap must be >= 2")

    g = GeoGraph()
    for nid in ts.ids:
        g.add_node(nid, ts.locations[nid])
    full = {}
    zero_var = []
    for nid in ts.ids:
        s = ts.series[nid]
        valid = ~np.isnan(s)
        if valid.all():
            full[nid] = _centered(s)
        present = s[valid]
        if present.size == 0 or np.all(present == present[0]):
            zero_var.append(nid)
    zero = set(zero_var)

    ids = ts.ids
    for a in range(len(ids)):
        u = ids[a]
        if u in zero:
            continue
        for b in range(a + 1, len(ids)):
            v = ids[b]
            if v in zero:
                continue
            if u in full and v in full:
                if ts.length < min_overlap:
                    continue
                r = _pearson_centered(*full[u], *full[v])
            else:
                r = pearson(ts.series[u], ts.series[v], min_overlap)
            if r is not None and tau.passes(r):
                g.add_edge(u, v, r, {"r": r})
    if zero_var:
        log.warning("%d node(s) with zero-variance series kept isolated", len(zero_var))
    g.meta["zero_variance"] = zero_var
    g.meta["tau"] = tau.value
    return g


@dataclass
class ODMatrix:
    zone_ids: list[NodeId]
    locations: dict[NodeId, GeoPoint]
    flow: dict[tuple[NodeId, NodeId], float] = field(default_factory=dict)

    def __post_init__(self):
        zones = set(self.zone_ids)
        if len(zones) != len(self.zone_ids):
            raise GeoGraphError("duplicate zone ids")
        for z in self.zone_ids:
            if z not in self.locations:
                raise GeoGraphError(f"zone {z!r} has no centroid")
        for (o, d), value in self.flow.items():
            if o not in zones or d not in zones:
                raise GeoGraphError(f"flow ({o!r}, {d!r}) references an unknown zone")
            if not math.isfinite(value) or value < 0:
                raise GeoGraphError(f"flow ({o!r}, {d!r}) = {value} is negative or non-finite")

    @classmethod
    def from_rows(cls, zone_ids: list[NodeId], locations: dict[NodeId, GeoPoint],
                  rows: Iterable[tuple[NodeId, NodeId, float]]) -> "ODMatrix":
        flow: dict[tuple[NodeId, NodeId], float] = {}
        for o, d, value in rows:
            if (o, d) in flow:
                raise GeoGraphError(f"duplicate OD entry ({o!r}, {d!r})")
            flow[(o, d)] = float(value)
        return cls(zone_ids, locations, flow)

    def get(self, o: NodeId, d: NodeId) -> float:
        return self.flow.get((o, d), 0.0)


def flow_network(od: ODMatrix, tau: Threshold | float = DEFAULT_FLOW_THRESHOLD) -> GeoGraph:
    """Edge {u, v} iff flow(u->v) + flow(v->u) > tau; weight is that sum.

    Nodes get a ``degree`` attribute. Intrazonal flows are ignored.
    """
    tau = _as_threshold(tau)
    if tau.value < 0:
        raise GeoGraphError(f"flow threshold must be >= 0, got {tau.value}")
    g = GeoGraph()
    zones = sorted(od.zone_ids, key=id_sort_key)
    for z in zones:
        g.add_node(z, od.locations[z])
    for a in range(len(zones)):
        for b in range(a + 1, len(zones)):
            u, v = zones[a], zones[b]
            total = od.get(u, v) + od.get(v, u)
            if tau.passes(total):
                g.add_edge(u, v, total)
    g.meta["tau"] = tau.value
    return attach_metrics(g, [degree(g)])


def graph_from_adjacency(points: FeatureCollection, m: AdjacencyMatrix) -> GeoGraph:
    """Nodes from a point layer keyed by its integer ``id`` field, edges from ``m``."""
    if points.geometry_kind != "point":
        raise GeoGraphError("node layer must be a point collection")
    try:
        col = points.schema.index("id")
    except KeyError:
        raise GeoGraphError("point layer has no field named 'id'") from None
    if points.schema.fields[col].kind != "integer":
        raise GeoGraphError("field 'id' must be of integer type")
    names = points.schema.names
    g = GeoGraph()
    for k, feat in enumerate(points.features):
        nid = feat.attributes[col]
        if nid is None:
            raise GeoGraphError(f"point {k} has a null id")
        if feat.geometry is None:
            raise GeoGraphError(f"point id {nid} has no geometry")
        if nid in g.nodes:
            raise GeoGraphError(f"duplicate id {nid} in point layer")
        g.add_node(nid, feat.geometry, dict(zip(names, feat.attributes)))
    ids = set(m.ids)
    absent = sorted(ids - set(g.nodes))
    if absent:
        raise AdjacencyError(f"matrix ids not in point layer: {absent}")
    extra = sorted(set(g.nodes) - ids)
    if extra:
        raise AdjacencyError(f"point ids missing from matrix: {extra}")
    for u, v in m.edges():
        g.add_edge(u, v)
    return g


# ---------------------------------------------------------------- CSV I/O

def _rows(path: str | os.PathLike):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if row and any(cell.strip() for cell in row):
                yield lineno, [cell.strip() for cell in row]


def _parse_id(text: str) -> NodeId:
    try:
        return int(text)
    except ValueError:
        return text


def _number(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise GeoGraphError(f"{where}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise GeoGraphError(f"{where}: non-finite value {text!r}")
    return value


def read_locations_csv(path: str | os.PathLike) -> dict[NodeId, GeoPoint]:
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise GeoGraphError(f"{path}: empty file") from None
    cols = [h.lower() for h in header]
    try:
        ci, cx, cy = cols.index("id"), cols.index("x"), cols.index("y")
    except ValueError:
        raise GeoGraphError(f"{path}:1: expected columns id,x,y") from None
    locs: dict[NodeId, GeoPoint] = {}
    for lineno, row in rows:
        where = f"{path}:{lineno}"
        nid = _parse_id(row[ci])
        if nid in locs:
            raise GeoGraphError(f"{where}: duplicate id {nid!r}")
        locs[nid] = GeoPoint(_number(row[cx], where), _number(row[cy], where))
    return locs


def read_series_csv(path: str | os.PathLike, locations: Mapping[NodeId, GeoPoint],
                    cadence: str | None = None) -> TimeSeriesSet:
    """First column is the timestamp; one column per node id; blank/NA is missing."""
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise GeoGraphError(f"{path}: empty file") from None
    ids = [_parse_id(h) for h in header[1:]]
    missing = [i for i in ids if i not in locations]
    if missing:
        raise GeoGraphError(f"{path}:1: no location for series {missing[:5]}")
    columns: list[list[float]] = [[] for _ in ids]
    for lineno, row in rows:
        where = f"{path}:{lineno}"
        if len(row) != len(header):
            raise GeoGraphError(f"{where}: {len(row)} cells, expected {len(header)}")
        for k, cell in enumerate(row[1:]):
            if cell.lower() in MISSING_TOKENS:
                columns[k].append(math.nan)
            else:
                columns[k].append(_number(cell, where))
    return TimeSeriesSet(ids, {i: locations[i] for i in ids},
                         {i: np.array(col) for i, col in zip(ids, columns)}, cadence)


def read_od_csv(path: str | os.PathLike, zones: Mapping[NodeId, GeoPoint]) -> ODMatrix:
    rows = _rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise GeoGraphError(f"{path}: empty file") from None
    cols = [h.lower() for h in header]
    try:
        co, cd, cf = cols.index("origin"), cols.index("dest"), cols.index("flow")
    except ValueError:
        raise GeoGraphError(f"{path}:1: expected columns origin,dest,flow") from None
    flow: dict[tuple[NodeId, NodeId], float] = {}
    for lineno, row in rows:
        where = f"{path}:{lineno}"
        o, d = _parse_id(row[co]), _parse_id(row[cd])
        for z in (o, d):
            if z not in zones:
                raise GeoGraphError(f"{where}: unknown zone {z!r}")
        value = _number(row[cf], where)
        if value < 0:
            raise GeoGraphError(f"{where}: negative flow {value}")
        if (o, d) in flow:
            raise GeoGraphError(f"{where}: duplicate OD pair ({o!r}, {d!r})")
        flow[(o, d)] = value
    ordered = sorted(zones, key=id_sort_key)
    return ODMatrix(ordered, {z: zones[z] for z in ordered}, flow)


def read_adjacency_csv(path: str | os.PathLike, ids: Sequence[int] | None = None
                       ) -> AdjacencyMatrix:
    """Read a 0/1 matrix, optionally with a header row and id column.

    With headers the top-left cell is blank (or a label such as ``id``) and
    each body row starts with its id, in the same order as the header.
    Without headers ``ids`` binds rows to node ids (default ``0..n-1``).
    """
    rows = list(_rows(path))
    if not rows:
        raise AdjacencyError(f"{path}: empty file")
    first = rows[0][1]
    corner = first[0]
    has_header = corner == "" or not _is_int(corner)
    body = rows[1:] if has_header else rows
    if has_header:
        try:
            col_ids = [int(c) for c in first[1:]]
        except ValueError:
            raise AdjacencyError(f"{path}:{rows[0][0]}: header ids must be integers") from None
    entries = []
    row_ids = []
    for lineno, row in body:
        cells = row[1:] if has_header else row
        if has_header:
            if not _is_int(row[0]):
                raise AdjacencyError(f"{path}:{lineno}: row id {row[0]!r} is not an integer")
            row_ids.append(int(row[0]))
        values = []
        for cell in cells:
            if cell not in ("0", "1"):
                raise AdjacencyError(f"{path}:{lineno}: entry {cell!r} is not 0 or 1")
            values.append(int(cell))
        entries.append(values)
    if has_header:
        if row_ids != col_ids:
            raise AdjacencyError(f"{path}: row ids do not match column ids")
        ids = col_ids
    try:
        return validate_adjacency(entries, ids)
    except AdjacencyError as exc:
        raise AdjacencyError(f"{path}: {exc}") from None


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


def write_adjacency_csv(m: AdjacencyMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *m.ids])
        for nid, row in zip(m.ids, m.entries):
            w.writerow([nid, *(int(v) for v in row)])
