"""``geographs`` command-line tool.

Exit codes: 0 success, 1 bad input (one-line message on stderr), 2 internal
error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import gis_export, graph_extract, graph_metrics, network_builders, osm_ingest
from .errors import GeoGraphError, ShapefileError
from .gis_export import ExportStyle, apply_style, write_graph
from .network_builders import Threshold
from .shapefile_io import read_shapefile, write_shapefile

log = logging.getLogger("geographs")

METRICS = ("degree", "clustering", "betweenness")


class UsageError(GeoGraphError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _decimal(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None


def _breaks(text: str) -> tuple[float, ...]:
    return tuple(_decimal(t) for t in text.split(",") if t.strip())


def _add_style(p: argparse.ArgumentParser) -> None:
    p.add_argument("--node-class", metavar="METRIC", help="node attribute to class by")
    p.add_argument("--edge-class", metavar="METRIC", help="edge attribute (or 'weight') to class by")
    p.add_argument("--breaks", type=_breaks, default=(), help="ascending class breaks, comma separated")


def _style(args) -> ExportStyle | None:
    if not (args.node_class or args.edge_class):
        return None
    return ExportStyle(args.node_class, args.edge_class, args.breaks)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geographs", description="Convert between GIS layers and (geo)graphs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="linestring shapefile -> graph")
    p.add_argument("--in", dest="input", required=True, help="shapefile stem")
    p.add_argument("--tol", type=_decimal, default=None)
    p.add_argument("--mode", choices=("geometric", "endpoint"), default="geometric")
    p.add_argument("--cell-size", type=_decimal, default=None)
    p.add_argument("--geographic", action="store_true", help="coordinates are lon/lat")
    p.add_argument("--keep-geometry", action="store_true",
                   help="also write <out>_features with the original line geometry")
    p.add_argument("--out", required=True)

    p = sub.add_parser("osm2graph", help="OSM XML street network -> street graph")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--filter", default=None, help="tag filter, e.g. 'highway' or 'highway=primary|secondary'")
    p.add_argument("--out", required=True)

    p = sub.add_parser("geocnet", help="point shapefile + adjacency CSV -> edge line shapefile")
    p.add_argument("--points", required=True)
    p.add_argument("--adj", required=True)
    p.add_argument("--no-metrics", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("corrnet", help="time-series CSV -> correlation network")
    p.add_argument("--series", required=True)
    p.add_argument("--locations", required=True)
    p.add_argument("--tau", type=_decimal, required=True)
    p.add_argument("--min-overlap", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("flownet", help="origin-destination CSV -> flow network")
    p.add_argument("--od", required=True)
    p.add_argument("--zones", required=True)
    p.add_argument("--tau", type=_decimal, default=network_builders.DEFAULT_FLOW_THRESHOLD)
    p.add_argument("--out", required=True)

    p = sub.add_parser("metrics", help="attach metrics to a GeoJSON graph")
    p.add_argument("--in", dest="input", required=True)
    for m in METRICS:
        p.add_argument(f"--{m}", action="store_true")
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--format", choices=("shp", "geojson", "all"), default="all")
    _add_style(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("export", help="GeoJSON graph -> shapefiles or GeoJSON")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=("shp", "geojson"), required=True)
    _add_style(p)
    p.add_argument("--out", required=True)
    return parser


def _formats(fmt: str) -> tuple[str, ...]:
    return ("shp", "geojson") if fmt == "all" else (fmt,)


def _finish(g, args, formats=("shp", "geojson")) -> None:
    style = _style(args) if hasattr(args, "breaks") else None
    if style is not None:
        g = apply_style(g, style)
    for path in write_graph(g, args.out, formats):
        log.info("wrote %s", path)
    print(f"{g.number_of_nodes()} nodes, {g.number_of_edges()} edges -> {args.out}")


def cmd_extract(args) -> None:
    c = read_shapefile(args.input, mode="geographic" if args.geographic else "planar")
    if c.geometry_kind != "polyline":
        raise ShapefileError(f"{args.input}: extract needs a polyline shapefile")
    idx = graph_extract.build_spatial_index(c, args.cell_size)
    conns = graph_extract.find_connections(c, idx, args.tol, args.mode)
    g = graph_extract.features_to_geograph(c, conns)
    if args.keep_geometry:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_shapefile(gis_export.features_with_geometry(c, g),
                        out.with_name(out.name + "_features"))
    _finish(g, args)


def cmd_osm2graph(args) -> None:
    path = Path(args.input)
    if not path.exists():
        raise GeoGraphError(f"{path}: file not found")
    try:
        c, conns = osm_ingest.osm_streets(path, osm_ingest.parse_tag_filter(args.filter))
    except GeoGraphError as exc:
        raise GeoGraphError(f"{path}: {exc}") from None
    _finish(graph_extract.features_to_geograph(c, conns), args)


def cmd_geocnet(args) -> None:
    points = read_shapefile(args.points)
    m = network_builders.read_adjacency_csv(args.adj)
    g = network_builders.graph_from_adjacency(points, m)
    if not args.no_metrics:
        g = graph_metrics.attach_metrics(g, graph_metrics.compute_metrics(g, METRICS))
    _finish(g, args)


def cmd_corrnet(args) -> None:
    locs = network_builders.read_locations_csv(args.locations)
    ts = network_builders.read_series_csv(args.series, locs)
    g = network_builders.correlation_network(ts, Threshold(args.tau), args.min_overlap)
    zero = g.meta.get("zero_variance") or []
    if zero:
        print(f"zero-variance series (isolated): {', '.join(map(str, zero))}", file=sys.stderr)
    _finish(g, args)


def cmd_flownet(args) -> None:
    zones = network_builders.read_locations_csv(args.zones)
    od = network_builders.read_od_csv(args.od, zones)
    _finish(network_builders.flow_network(od, Threshold(args.tau)), args)


def cmd_metrics(args) -> None:
    g = gis_export.read_graph(args.input)
    names = [m for m in METRICS if getattr(args, m)] or list(METRICS)
    vectors = graph_metrics.compute_metrics(g, names, normalized=args.normalized,
                                            weighted=args.weighted)
    _finish(graph_metrics.attach_metrics(g, vectors), args, _formats(args.format))


def cmd_export(args) -> None:
    _finish(gis_export.read_graph(args.input), args, (args.format,))


COMMANDS = {
    "extract": cmd_extract, "osm2graph": cmd_osm2graph, "geocnet": cmd_geocnet,
    "corrnet": cmd_corrnet, "flownet": cmd_flownet, "metrics": cmd_metrics,
    "export": cmd_export,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(format="geographs: %(message)s", level=logging.WARNING)
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        COMMANDS[args.command](args)
    except (GeoGraphError, OSError) as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - anything else is our bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
