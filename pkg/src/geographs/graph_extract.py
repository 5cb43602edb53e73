"""Connection detection between linestring features and graph construction.

Segment predicates use floating point with a Shewchuk-style error filter and
fall back to exact rational arithmetic when the float result is not certain,
so touching and collinear cases are decided exactly.
"""

from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction
from typing import Literal, NamedTuple, Sequence

from .errors import GeoGraphError
from .geo_model import Coord, Feature, FeatureCollection, GeoGraph, GeoPoint, PolyLine

_ORIENT_ERR = 3.3306690738754716e-16
_DIST_SLACK = 1e-9


class Connection(NamedTuple):
    i: int
    j: int
    witness: GeoPoint


# ------------------------------------------------------------ predicates

def orient(a: Coord, b: Coord, c: Coord) -> int:
    """Sign of the cross product (b - a) x (c - a)."""
    detl = (b[0] - a[0]) * (c[1] - a[1])
    detr = (b[1] - a[1]) * (c[0] - a[0])
    det = detl - detr
    if abs(det) > _ORIENT_ERR * (abs(detl) + abs(detr)):
        return 1 if det > 0 else -1
    ax, ay = Fraction(a[0]), Fraction(a[1])
    exact = (Fraction(b[0]) - ax) * (Fraction(c[1]) - ay) \
        - (Fraction(b[1]) - ay) * (Fraction(c[0]) - ax)
    return (exact > 0) - (exact < 0)


def _in_box(a: Coord, b: Coord, p: Coord) -> bool:
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def on_segment(a: Coord, b: Coord, p: Coord) -> bool:
    return _in_box(a, b, p) and orient(a, b, p) == 0


def segment_intersection(p1: Coord, p2: Coord, q1: Coord, q2: Coord) -> Coord | None:
    """A common point of two closed segments, or None.

    Crossing -> the crossing point; touching -> the touching vertex;
    collinear overlap -> midpoint of the overlap.
    """
    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 == o2 == o3 == o4 == 0:
        hits = [pt for pt in (p1, p2) if _in_box(q1, q2, pt)]
        hits += [pt for pt in (q1, q2) if _in_box(p1, p2, pt)]
        if not hits:
            return None
        hits.sort()
        lo, hi = hits[0], hits[-1]
        return ((lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        rx, ry = p2[0] - p1[0], p2[1] - p1[1]
        sx, sy = q2[0] - q1[0], q2[1] - q1[1]
        t = ((q1[0] - p1[0]) * sy - (q1[1] - p1[1]) * sx) / (rx * sy - ry * sx)
        return (p1[0] + t * rx, p1[1] + t * ry)
    for o, a, b, p in ((o1, p1, p2, q1), (o2, p1, p2, q2),
                       (o3, q1, q2, p1), (o4, q1, q2, p2)):
        if o == 0 and _in_box(a, b, p):
            return p
    return None


def _closest_on_segment(p: Coord, a: Coord, b: Coord) -> Coord:
    dx, dy = b[0] - a[0], b[1] - a[1]
    den = dx * dx + dy * dy
    if den == 0:
        return a
    t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / den
    t = min(1.0, max(0.0, t))
    return (a[0] + t * dx, a[1] + t * dy)


def _exact_dist2(p: Coord, a: Coord, b: Coord) -> Fraction:
    px, py = Fraction(p[0]), Fraction(p[1])
    ax, ay = Fraction(a[0]), Fraction(a[1])
    dx, dy = Fraction(b[0]) - ax, Fraction(b[1]) - ay
    den = dx * dx + dy * dy
    if den == 0:
        cx, cy = ax, ay
    else:
        t = ((px - ax) * dx + (py - ay) * dy) / den
        t = min(Fraction(1), max(Fraction(0), t))
        cx, cy = ax + t * dx, ay + t * dy
    return (px - cx) ** 2 + (py - cy) ** 2


def point_within(p: Coord, a: Coord, b: Coord, tol: float) -> Coord | None:
    """Midpoint of ``p`` and its closest point on ab if their distance <= tol."""
    if tol == 0:
        return p if on_segment(a, b, p) else None
    c = _closest_on_segment(p, a, b)
    d2 = (p[0] - c[0]) ** 2 + (p[1] - c[1]) ** 2
    t2 = tol * tol
    if abs(d2 - t2) <= _DIST_SLACK * max(d2, t2):
        ok = _exact_dist2(p, a, b) <= Fraction(tol) ** 2
    else:
        ok = d2 <= t2
    if not ok:
        return None
    return ((p[0] + c[0]) / 2, (p[1] + c[1]) / 2)


def segments_within(p1: Coord, p2: Coord, q1: Coord, q2: Coord, tol: float) -> Coord | None:
    hit = segment_intersection(p1, p2, q1, q2)
    if hit is not None or tol == 0:
        return hit
    best, best_d2 = None, math.inf
    for p, a, b in ((p1, q1, q2), (p2, q1, q2), (q1, p1, p2), (q2, p1, p2)):
        w = point_within(p, a, b, tol)
        if w is not None:
            d2 = (w[0] - p[0]) ** 2 + (w[1] - p[1]) ** 2
            if d2 < best_d2:
                best, best_d2 = w, d2
    return best


# ------------------------------------------------------------ spatial index

SegmentRef = tuple[int, int, int]


class SpatialIndex:
    """Uniform grid; each segment is listed in every cell its bbox overlaps."""

    def __init__(self, origin: Coord, cell_size: float, shape: tuple[int, int]):
        self.origin = origin
        self.cell_size = cell_size
        self.shape = shape
        self.cells: dict[tuple[int, int], list[SegmentRef]] = defaultdict(list)
        self.segments: dict[SegmentRef, tuple[Coord, Coord]] = {}

    def _cell(self, x: float, y: float) -> tuple[int, int]:
        cx = math.floor((x - self.origin[0]) / self.cell_size)
        cy = math.floor((y - self.origin[1]) / self.cell_size)
        return cx, cy

    def _range(self, bbox) -> tuple[range, range]:
        x0, y0 = self._cell(bbox[0], bbox[1])
        x1, y1 = self._cell(bbox[2], bbox[3])
        nx, ny = self.shape
        return (range(max(x0, 0), min(x1, nx - 1) + 1),
                range(max(y0, 0), min(y1, ny - 1) + 1))

    def insert(self, ref: SegmentRef, a: Coord, b: Coord) -> None:
        self.segments[ref] = (a, b)
        xs, ys = self._range((min(a[0], b[0]), min(a[1], b[1]),
                              max(a[0], b[0]), max(a[1], b[1])))
        for cx in xs:
            for cy in ys:
                self.cells[(cx, cy)].append(ref)

    def query(self, bbox: tuple[float, float, float, float]) -> set[SegmentRef]:
        """Segments whose cells overlap ``bbox`` (a superset of the true hits)."""
        xs, ys = self._range(bbox)
        found: set[SegmentRef] = set()
        cells = self.cells
        for cx in xs:
            for cy in ys:
                hit = cells.get((cx, cy))
                if hit:
                    found.update(hit)
        return found

    def candidates_at(self, x: float, y: float) -> list[SegmentRef]:
        return list(self.cells.get(self._cell(x, y), ()))


def iter_segments(geom: PolyLine):
    for pi, part in enumerate(geom.parts):
        for si in range(len(part) - 1):
            yield pi, si, part[si], part[si + 1]


def _require_polylines(c: FeatureCollection) -> None:
    if c.geometry_kind != "polyline":
        raise GeoGraphError("connection detection needs a polyline collection")


def build_spatial_index(c: FeatureCollection, cell_size: float | None = None
                        ) -> SpatialIndex:
    _require_polylines(c)
    geoms = [(i, f.geometry) for i, f in enumerate(c.features) if f.geometry is not None]
    if not geoms:
        raise GeoGraphError("cannot index an empty collection")
    x0 = min(g.bbox[0] for _, g in geoms)
    y0 = min(g.bbox[1] for _, g in geoms)
    x1 = max(g.bbox[2] for _, g in geoms)
    y1 = max(g.bbox[3] for _, g in geoms)
    nseg = sum(g.num_points - len(g.parts) for _, g in geoms)
    extent = max(x1 - x0, y1 - y0)
    if extent == 0:
        cell, shape = 1.0, (1, 1)
    else:
        if cell_size is None:
            cell = extent / math.ceil(math.sqrt(max(nseg, 1)))
        else:
            if not cell_size > 0:
                raise GeoGraphError(f"cell size must be positive, got {cell_size}")
            cell = float(cell_size)
        cell = max(cell, extent * 1e-9)
        shape = (math.floor((x1 - x0) / cell) + 1, math.floor((y1 - y0) / cell) + 1)
    idx = SpatialIndex((x0, y0), cell, shape)
    for fi, g in geoms:
        for pi, si, a, b in iter_segments(g):
            idx.insert((fi, pi, si), a, b)
    return idx


def default_tolerance(c: FeatureCollection, mode: str) -> float:
    if mode == "geometric":
        return 0.0
    boxes = [f.geometry.bbox for f in c.features if f.geometry is not None]
    if not boxes:
        return 0.0
    w = max(b[2] for b in boxes) - min(b[0] for b in boxes)
    h = max(b[3] for b in boxes) - min(b[1] for b in boxes)
    return 1e-9 * math.hypot(w, h)


def _grow(bbox, tol: float):
    # pad so that rounding in the subtraction can never shrink the query box
    pad = tol * (1 + 1e-9) + 1e-12 * max(map(abs, bbox), default=0.0) if tol else 0.0
    return (bbox[0] - pad, bbox[1] - pad, bbox[2] + pad, bbox[3] + pad)


def find_connections(c: FeatureCollection, idx: SpatialIndex | None = None,
                     tol: float | None = None,
                     mode: Literal["geometric", "endpoint"] = "geometric"
                     ) -> list[Connection]:
    """Connected feature pairs ``i < j``, ordered by ``(i, j)``.

    ``geometric``: some segment of i and some segment of j cross, touch,
    overlap or come within ``tol``. ``endpoint``: an endpoint of a part of
    one feature is within ``tol`` of the other feature.
    """
    _require_polylines(c)
    if mode not in ("geometric", "endpoint"):
        raise GeoGraphError(f"unknown connection mode {mode!r}")
    if tol is None:
        tol = default_tolerance(c, mode)
    if not tol >= 0 or math.isinf(tol):
        raise GeoGraphError(f"tolerance must be finite and >= 0, got {tol}")
    if not any(f.geometry is not None for f in c.features):
        return []
    if idx is None:
        idx = build_spatial_index(c)

    candidates: dict[tuple[int, int], list[tuple[tuple[int, int], tuple[int, int]]]] = \
        defaultdict(list)
    if mode == "geometric":
        for fi, feat in enumerate(c.features):
            if feat.geometry is None:
                continue
            for pi, si, a, b in iter_segments(feat.geometry):
                box = (min(a[0], b[0]), min(a[1], b[1]), max(a[0], b[0]), max(a[1], b[1]))
                for fj, pj, sj in idx.query(_grow(box, tol)):
                    if fj > fi:
                        candidates[(fi, fj)].append(((pi, si), (pj, sj)))
        conns = []
        for (fi, fj), pairs in sorted(candidates.items()):
            pairs.sort()
            gi, gj = c.features[fi].geometry, c.features[fj].geometry
            for (pi, si), (pj, sj) in pairs:
                a, b = gi.parts[pi][si], gi.parts[pi][si + 1]
                p, q = gj.parts[pj][sj], gj.parts[pj][sj + 1]
                x0, y0, x1, y1 = _grow((min(a[0], b[0]), min(a[1], b[1]),
                                        max(a[0], b[0]), max(a[1], b[1])), tol)
                if (max(p[0], q[0]) < x0 or min(p[0], q[0]) > x1
                        or max(p[1], q[1]) < y0 or min(p[1], q[1]) > y1):
                    continue
                w = segments_within(a, b, p, q, tol)
                if w is not None:
                    conns.append(Connection(fi, fj, GeoPoint(*w)))
                    break
        return conns

    found: dict[tuple[int, int], tuple] = {}
    for fi, feat in enumerate(c.features):
        if feat.geometry is None:
            continue
        for pi, part in enumerate(feat.geometry.parts):
            for end, p in ((0, part[0]), (1, part[-1])):
                refs = sorted(r for r in idx.query(_grow((p[0], p[1], p[0], p[1]), tol))
                              if r[0] != fi)
                for fj, pj, sj in refs:
                    key = (min(fi, fj), max(fi, fj))
                    order = (fi, pi, end, pj, sj) if fi < fj else (fj, pj, sj, pi, end)
                    if key in found and found[key][0] <= order:
                        continue
                    a, b = idx.segments[(fj, pj, sj)]
                    w = point_within(p, a, b, tol)
                    if w is not None:
                        found[key] = (order, w)
    return [Connection(i, j, GeoPoint(*found[(i, j)][1])) for i, j in sorted(found)]


# ------------------------------------------------------------ graph

def representative_point(f: Feature | GeoPoint | PolyLine) -> GeoPoint:
    """Point itself, or the point at half the arc length of the longest part."""
    geom = f.geometry if isinstance(f, Feature) else f
    if geom is None:
        raise GeoGraphError("feature has no geometry")
    if isinstance(geom, GeoPoint):
        return geom
    lengths = [_part_lengths(p) for p in geom.parts]
    totals = [sum(seg) for seg in lengths]
    k = max(range(len(totals)), key=lambda i: (totals[i], -i))
    part, segs = geom.parts[k], lengths[k]
    half = totals[k] / 2
    acc = 0.0
    for (a, b), seglen in zip(zip(part, part[1:]), segs):
        if seglen > 0 and acc + seglen >= half:
            t = (half - acc) / seglen
            return GeoPoint(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        acc += seglen
    return GeoPoint(*part[0])


def _part_lengths(part: Sequence[Coord]) -> list[float]:
    return [math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(part, part[1:])]


def features_to_geograph(c: FeatureCollection, conns: Sequence[Connection]) -> GeoGraph:
    """One node per feature (id = ordinal), one unit-weight edge per connection."""
    g = GeoGraph()
    names = c.schema.names
    for i, feat in enumerate(c.features):
        g.add_node(i, representative_point(feat), dict(zip(names, feat.attributes)))
    n = len(c.features)
    for conn in conns:
        i, j, w = conn
        if not (0 <= i < n and 0 <= j < n):
            raise GeoGraphError(f"connection ({i}, {j}) out of range for {n} features")
        g.add_edge(i, j, 1.0, {"witness_x": w.x, "witness_y": w.y})
    g.meta["mode"] = c.mode
    return g
