"""Synthetic stand-ins for the street, mobility and radar case studies."""

from __future__ import annotations

import math
from xml.sax.saxutils import quoteattr

import numpy as np

from .geo_model import GeoGraph, GeoPoint
from .network_builders import ODMatrix, TimeSeriesSet

AVENUE = "Avenida Central"


def street_grid_osm(n: int = 5, spacing: float = 0.002,
                    origin: tuple[float, float] = (-45.10, -22.74),
                    avenue: bool = True) -> bytes:
    """OSM XML for an n x n grid of named streets.

    Rows are "Rua Linha r", columns "Rua Coluna c". With ``avenue`` a
    diagonal "Avenida Central" runs corner to corner through every crossing
    (c, c). A river way without a highway tag is included so the default
    filter has something to drop.
    """
    lon0, lat0 = origin

    def nid(c: int, r: int) -> int:
        return 1000 + r * n + c

    out = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6">']
    for r in range(n):
        for c in range(n):
            out.append(f'  <node id="{nid(c, r)}" lat="{lat0 + r * spacing:.7f}" '
                       f'lon="{lon0 + c * spacing:.7f}"/>')
    river = [9000, 9001]
    out.append(f'  <node id="9000" lat="{lat0 - spacing:.7f}" lon="{lon0:.7f}"/>')
    out.append(f'  <node id="9001" lat="{lat0 - spacing:.7f}" lon="{lon0 + (n - 1) * spacing:.7f}"/>')

    def way(wid: int, refs, tags: dict[str, str]):
        out.append(f'  <way id="{wid}">')
        out.extend(f'    <nd ref="{ref}"/>' for ref in refs)
        out.extend(f'    <tag k={quoteattr(k)} v={quoteattr(v)}/>' for k, v in tags.items())
        out.append("  </way>")

    for r in range(n):
        way(100 + r, [nid(c, r) for c in range(n)],
            {"highway": "residential", "name": f"Rua Linha {r + 1}"})
    for c in range(n):
        way(200 + c, [nid(c, r) for r in range(n)],
            {"highway": "residential", "name": f"Rua Coluna {c + 1}"})
    if avenue:
        way(300, [nid(k, k) for k in range(n)], {"highway": "primary", "name": AVENUE})
    way(400, river, {"waterway": "river", "name": "Rio Paraíba"})
    out.append("</osm>")
    return ("\n".join(out) + "\n").encode("utf-8")


RIO_CENTROIDS = {
    1: (-43.18, -22.91), 2: (-43.25, -22.88), 3: (-43.36, -22.97),
    4: (-43.10, -22.89), 5: (-43.45, -22.80), 6: (-43.05, -22.75),
}

# directed person-trips per day; 3->3 is intrazonal and ignored
RIO_FLOWS = [
    (1, 2, 600.0), (2, 1, 500.0),
    (1, 3, 1000.0),
    (1, 4, 2500.0), (4, 1, 1800.0),
    (2, 3, 400.0), (3, 2, 601.0),
    (2, 5, 300.0), (5, 2, 200.0),
    (4, 5, 700.0), (5, 4, 700.0),
    (4, 6, 1200.0),
    (5, 6, 500.0), (6, 5, 499.0),
    (6, 1, 10.0),
    (3, 3, 5000.0),
]


def rio_od(flows=RIO_FLOWS, centroids=RIO_CENTROIDS) -> ODMatrix:
    zones = sorted(centroids)
    return ODMatrix.from_rows(zones, {z: GeoPoint(*centroids[z]) for z in zones}, flows)


FOUR_ZONE_CENTROIDS = {1: (0.0, 0.0), 2: (1.0, 0.0), 3: (0.0, 1.0), 4: (1.0, 1.0)}
FOUR_ZONE_FLOWS = [
    (1, 2, 600.0), (2, 1, 500.0),
    (1, 3, 1000.0),
    (2, 4, 2000.0),
    (3, 4, 700.0), (4, 3, 400.0),
    (2, 3, 100.0),
]


def two_block_series(block_sizes: tuple[int, int] = (4, 4), length: int = 144,
                     noise: float = 0.1, seed: int = 7,
                     origin: tuple[float, float] = (-42.60, -22.35),
                     spacing: float = 0.02) -> TimeSeriesSet:
    """Radar-like rainfall series at grid points, two independent blocks.

    Each block shares one latent signal; the second latent is orthogonalised
    against the first so the blocks are uncorrelated up to the noise. Default
    length is one day at a 10-minute cadence.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(length)
    b = rng.standard_normal(length)
    a -= a.mean()
    b -= b.mean()
    b -= (b @ a) / (a @ a) * a
    a /= a.std()
    b /= b.std()
    ids, locs, series = [], {}, {}
    k = 0
    for block, latent in enumerate((a, b)):
        for j in range(block_sizes[block]):
            nid = k + 1
            col, row = block * 2 + j % 2, j // 2
            locs[nid] = GeoPoint(origin[0] + col * spacing, origin[1] + row * spacing)
            rain = 5.0 + 2.0 * latent + noise * 2.0 * rng.standard_normal(length)
            series[nid] = np.clip(rain, 0.0, None)
            ids.append(nid)
            k += 1
    return TimeSeriesSet(ids, locs, series, cadence="10min")


def random_geometric_graph(n: int = 10_000, mean_degree: float = 6.0, seed: int = 0
                           ) -> GeoGraph:
    """Unit-square random geometric graph with about n * mean_degree / 2 edges."""
    from scipy.spatial import cKDTree

    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    radius = math.sqrt(mean_degree / ((n - 1) * math.pi))
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    g = GeoGraph()
    for i, (x, y) in enumerate(pts):
        g.add_node(i, GeoPoint(float(x), float(y)))
    for i, j in pairs:
        g.add_edge(int(i), int(j))
    return g
