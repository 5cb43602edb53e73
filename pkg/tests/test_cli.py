import csv
import subprocess
import sys

import pytest
import shapefile as pyshp

from geographs.cli import main
from geographs.gis_export import read_graph
from geographs.shapefile_io import read_shapefile, write_shapefile
from geographs.synthetic import FOUR_ZONE_CENTROIDS, FOUR_ZONE_FLOWS, street_grid_osm
from geographs.geo_model import Feature, FeatureCollection, Field, FieldSchema, PolyLine

from strategies import point_layer


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    return path


@pytest.fixture
def zones(tmp_path):
    loc = write_csv(tmp_path / "zones.csv",
                    [["id", "x", "y"]] + [[z, x, y] for z, (x, y) in FOUR_ZONE_CENTROIDS.items()])
    od = write_csv(tmp_path / "od.csv", [["origin", "dest", "flow"]] + [list(r) for r in FOUR_ZONE_FLOWS])
    return loc, od


def test_geocnet_three_points_two_edges(tmp_path, capsys):
    write_shapefile(point_layer([10, 20, 30]), tmp_path / "pts")
    write_csv(tmp_path / "adj.csv", [["", 10, 20, 30], [10, 0, 1, 0], [20, 1, 0, 1], [30, 0, 1, 0]])
    code = main(["geocnet", "--points", str(tmp_path / "pts"), "--adj", str(tmp_path / "adj.csv"),
                 "--out", str(tmp_path / "net")])
    assert code == 0
    edges = read_shapefile(tmp_path / "net_edges")
    assert len(edges) == 2
    assert [f.attributes[:2] for f in edges] == [(10, 20), (20, 30)]
    assert "3 nodes, 2 edges" in capsys.readouterr().out


def test_flownet_four_zones(tmp_path, zones):
    loc, od = zones
    assert main(["flownet", "--od", str(od), "--zones", str(loc), "--tau", "1000",
                 "--out", str(tmp_path / "flow")]) == 0
    edges = read_shapefile(tmp_path / "flow_edges")
    assert sorted(f.attributes[:3] for f in edges) == [(1, 2, 1100.0), (2, 4, 2000.0), (3, 4, 1100.0)]


def test_extract_on_polygon_fails_with_code_1(tmp_path, capsys):
    w = pyshp.Writer(str(tmp_path / "poly"), shapeType=pyshp.POLYGON)
    w.field("id", "N", size=5)
    w.poly([[(0, 0), (0, 1), (1, 1), (0, 0)]])
    w.record(1)
    w.close()
    code = main(["extract", "--in", str(tmp_path / "poly"), "--out", str(tmp_path / "g")])
    err = capsys.readouterr().err
    assert code == 1
    assert "unsupported shape type 5" in err
    assert len(err.strip().splitlines()) == 1


def test_extract_lines(tmp_path):
    schema = FieldSchema([Field("name", "text", 5)])
    c = FeatureCollection(schema, "polyline", [
        Feature(PolyLine([[(0, 0), (2, 2)]]), ["a"]), Feature(PolyLine([[(0, 2), (2, 0)]]), ["b"]),
        Feature(PolyLine([[(5, 5), (6, 5)]]), ["c"])])
    write_shapefile(c, tmp_path / "lines")
    assert main(["extract", "--in", str(tmp_path / "lines"), "--keep-geometry",
                 "--out", str(tmp_path / "g")]) == 0
    g = read_graph(tmp_path / "g.geojson")
    assert [(e.u, e.v) for e in g.edges()] == [(0, 1)]
    feats = read_shapefile(tmp_path / "g_features")
    assert [f.geometry for f in feats] == [f.geometry for f in c]


def test_osm2graph_then_metrics(tmp_path):
    (tmp_path / "grid.osm").write_bytes(street_grid_osm(5))
    assert main(["osm2graph", "--in", str(tmp_path / "grid.osm"), "--out", str(tmp_path / "st")]) == 0
    assert main(["metrics", "--in", str(tmp_path / "st.geojson"), "--betweenness",
                 "--node-class", "betweenness", "--breaks", "2,3", "--out", str(tmp_path / "m")]) == 0
    g = read_graph(tmp_path / "m.geojson")
    top = max(g.nodes.values(), key=lambda n: n.attributes["betweenness"])
    assert top.attributes["name"] == "Avenida Central" and top.attributes["class"] == 2


def test_corrnet(tmp_path, capsys):
    write_csv(tmp_path / "loc.csv", [["id", "x", "y"], [1, 0, 0], [2, 1, 0], [3, 2, 0]])
    rows = [["t", 1, 2, 3]] + [[t, t, 2 * t + 1, 4] for t in range(6)]
    write_csv(tmp_path / "ts.csv", rows)
    assert main(["corrnet", "--series", str(tmp_path / "ts.csv"), "--locations",
                 str(tmp_path / "loc.csv"), "--tau", "0.5", "--out", str(tmp_path / "c")]) == 0
    assert "zero-variance series (isolated): 3" in capsys.readouterr().err
    g = read_graph(tmp_path / "c.geojson")
    assert [(e.u, e.v) for e in g.edges()] == [(1, 2)]


def test_export_formats(tmp_path, zones):
    loc, od = zones
    main(["flownet", "--od", str(od), "--zones", str(loc), "--out", str(tmp_path / "f")])
    assert main(["export", "--in", str(tmp_path / "f.geojson"), "--format", "shp",
                 "--out", str(tmp_path / "e")]) == 0
    assert (tmp_path / "e_nodes.shp").exists() and not (tmp_path / "e.geojson").exists()


def test_outputs_are_deterministic(tmp_path, zones):
    loc, od = zones
    for k in range(2):
        main(["flownet", "--od", str(od), "--zones", str(loc), "--out", str(tmp_path / f"r{k}")])
    for suffix in ("_nodes.shp", "_nodes.dbf", "_edges.shp", "_edges.shx", "_edges.dbf", ".geojson"):
        assert (tmp_path / f"r0{suffix}").read_bytes() == (tmp_path / f"r1{suffix}").read_bytes()


@pytest.mark.parametrize("argv", [
    ["flownet", "--bogus"],
    ["extract"],
    ["nosuchcommand"],
    ["corrnet", "--series", "a", "--locations", "b", "--tau", "high", "--out", "x"],
])
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("error: ")


def test_missing_input_file(tmp_path, capsys):
    assert main(["metrics", "--in", str(tmp_path / "none.geojson"), "--out", str(tmp_path / "o")]) == 1
    assert "not found" in capsys.readouterr().err


def test_module_entry_point(tmp_path, zones):
    loc, od = zones
    proc = subprocess.run([sys.executable, "-m", "geographs", "flownet", "--od", str(od),
                           "--zones", str(loc), "--out", str(tmp_path / "p")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "4 nodes, 3 edges" in proc.stdout
