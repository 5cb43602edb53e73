import json
import logging

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from geographs.errors import GeoGraphError
from geographs.geo_model import GeoGraph, GeoPoint, validate_adjacency
from geographs.gis_export import (ExportStyle, apply_style, dbf_field_names, edges_to_features,
                                  from_geojson, nodes_to_features, read_graph, to_geojson,
                                  write_graph)
from geographs.graph_metrics import attach_metrics, degree
from geographs.network_builders import flow_network, graph_from_adjacency
from geographs.shapefile_io import read_shapefile, write_shapefile
from geographs.synthetic import FOUR_ZONE_CENTROIDS, FOUR_ZONE_FLOWS, rio_od

from strategies import point_layer


def two_node_graph():
    g = GeoGraph()
    g.add_node(1, (0.0, 0.0)).add_node(2, (1.0, 1.0))
    g.add_edge(1, 2, 1.0)
    return g


def test_edge_becomes_polyline_with_endpoint_attributes():
    c = edges_to_features(two_node_graph())
    assert c.geometry_kind == "polyline" and len(c) == 1
    f = c.features[0]
    assert f.geometry.parts == (((0.0, 0.0), (1.0, 1.0)),)
    assert c.schema.names[:3] == ["source", "target", "weight"]
    assert f.attributes[:3] == (1, 2, 1.0)
    assert c.schema.fields[2].kind == "real"


def test_empty_edge_set_has_schema():
    g = GeoGraph()
    g.add_node(1, (0, 0))
    c = edges_to_features(g)
    assert len(c) == 0 and c.schema.names == ["source", "target", "weight"]
    back = read_shapefile(write_shapefile(c))
    assert len(back) == 0 and back.schema == c.schema


def test_four_zone_edges_end_at_centroids():
    g = flow_network(rio_od(FOUR_ZONE_FLOWS, FOUR_ZONE_CENTROIDS), 1000)
    c = read_shapefile(write_shapefile(edges_to_features(g)))
    assert len(c) == 3
    for f in c:
        u, v = f.attributes[:2]
        assert f.geometry.parts[0] == (FOUR_ZONE_CENTROIDS[u], FOUR_ZONE_CENTROIDS[v])


def test_degree_exported_as_integer_field():
    g = GeoGraph()
    for k in range(3):
        g.add_node(k, (k, 0))
    g.add_edge(0, 1).add_edge(1, 2)
    c = nodes_to_features(attach_metrics(g, [degree(g)]))
    assert len(c) == 3
    assert c.schema.fields[c.schema.index("degree")].kind == "integer"
    back = read_shapefile(write_shapefile(c))
    assert [f.attributes for f in back] == [(0, 1), (1, 2), (2, 1)]


def test_truncation_collision_is_an_error():
    with pytest.raises(GeoGraphError, match="betweenness / betweenness_norm"):
        dbf_field_names(["betweenness", "betweenness_norm"])


def test_truncation_alone_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert dbf_field_names(["betweenness", "id"]) == ["betweennes", "id"]
    assert "betweennes" in caplog.text


def test_adjacency_graph_points_are_bit_identical():
    layer = point_layer([3, 1, 2], [30, 10, 20])
    m = validate_adjacency([[0, 1, 1], [1, 0, 0], [1, 0, 0]], [1, 2, 3])
    g = graph_from_adjacency(layer, m)
    back = read_shapefile(write_shapefile(nodes_to_features(g)))
    by_id = {f.attributes[0]: f for f in back}
    for f in layer:
        assert by_id[f.attributes[0]].geometry == f.geometry
        assert by_id[f.attributes[0]].attributes == f.attributes


def test_single_node_geojson():
    g = GeoGraph()
    g.add_node("z", (1.5, -2.0), {"pop": 3})
    doc = json.loads(to_geojson(g))
    assert doc["type"] == "FeatureCollection" and len(doc["features"]) == 1
    f = doc["features"][0]
    assert f["geometry"] == {"type": "Point", "coordinates": [1.5, -2.0]}
    assert f["id"] == "z" and f["properties"] == {"pop": 3}


def random_graph(data):
    n = data.draw(st.integers(1, 8))
    g = GeoGraph()
    coord = st.floats(-180, 180, allow_nan=False)
    attr = st.one_of(st.integers(-10**6, 10**6), st.floats(-1e6, 1e6, allow_nan=False),
                     st.text(max_size=8), st.booleans(), st.none())
    for k in range(n):
        g.add_node(k, (data.draw(coord), data.draw(coord)),
                   {"a": data.draw(attr), "score": data.draw(st.floats(0, 1))})
    for u in range(n):
        for v in range(u + 1, n):
            if data.draw(st.booleans()):
                g.add_edge(u, v, data.draw(st.floats(0.1, 100)), {"r": data.draw(st.floats(-1, 1))})
    return g


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_geojson_roundtrip_is_byte_stable(data):
    g = random_graph(data)
    text = to_geojson(g)
    back = from_geojson(text)
    assert to_geojson(back) == text
    assert back.node_ids() == g.node_ids()
    assert [(e.u, e.v, e.weight, e.attributes) for e in back.edges()] == \
        [(e.u, e.v, e.weight, e.attributes) for e in g.edges()]


def test_geojson_schema_conformance():
    jsonschema = pytest.importorskip("jsonschema")
    point = {"type": "object", "required": ["type", "coordinates"],
             "properties": {"type": {"const": "Point"},
                            "coordinates": {"type": "array", "minItems": 2,
                                            "items": {"type": "number"}}}}
    line = {"type": "object", "required": ["type", "coordinates"],
            "properties": {"type": {"const": "LineString"},
                           "coordinates": {"type": "array", "minItems": 2,
                                           "items": {"type": "array", "minItems": 2,
                                                     "items": {"type": "number"}}}}}
    schema = {"type": "object", "required": ["type", "features"],
              "properties": {"type": {"const": "FeatureCollection"},
                             "features": {"type": "array", "items": {
                                 "type": "object", "required": ["type", "geometry", "properties"],
                                 "properties": {"type": {"const": "Feature"},
                                                "id": {"type": ["string", "number"]},
                                                "geometry": {"oneOf": [point, line]},
                                                "properties": {"type": ["object", "null"]}}}}}}
    g = flow_network(rio_od(), 1000)
    jsonschema.validate(json.loads(to_geojson(g)), schema)


def test_gdal_reads_geojson(tmp_path):
    fiona = pytest.importorskip("fiona")
    g = flow_network(rio_od(), 1000)
    write_graph(g, tmp_path / "rio", ("geojson",))
    with fiona.open(tmp_path / "rio.geojson") as src:
        kinds = [f.geometry.type for f in src]
    assert kinds.count("Point") == 6 and kinds.count("LineString") == 5


def test_write_graph_layers_and_read_back(tmp_path):
    g = flow_network(rio_od(), 1000)
    paths = write_graph(g, tmp_path / "out" / "rio")
    assert sorted(p.name for p in paths) == ["rio.geojson", "rio_edges.shp", "rio_nodes.shp"]
    nodes = read_shapefile(tmp_path / "out" / "rio_nodes")
    assert [f.attributes for f in nodes] == [(n, int(g.nodes[n].attributes["degree"]))
                                            for n in g.node_ids()]
    assert to_geojson(read_graph(tmp_path / "out" / "rio.geojson")) == to_geojson(g)


def test_style_classes():
    style = ExportStyle("degree", "weight", (1.5, 2.5))
    assert [style.classify(v) for v in (0, 1.5, 2, 3, None)] == [0, 1, 1, 2, None]
    g = apply_style(flow_network(rio_od(), 1000), style)
    assert g.nodes[4].attributes["class"] == 2 and g.nodes[3].attributes["class"] == 0
    assert all(e.attributes["class"] == 2 for e in g.edges())
    with pytest.raises(GeoGraphError):
        ExportStyle("degree", None, (2, 1))


def test_reserved_edge_attribute_rejected():
    g = two_node_graph()
    g.add_edge(1, 2, 1.0, {"weight": 3})
    with pytest.raises(GeoGraphError, match="reserved"):
        edges_to_features(g)


def test_geojson_errors():
    with pytest.raises(GeoGraphError):
        from_geojson("[]")
    with pytest.raises(GeoGraphError, match="without an id"):
        from_geojson('{"type":"FeatureCollection","features":[{"type":"Feature",'
                     '"geometry":{"type":"Point","coordinates":[0,0]},"properties":{}}]}')
    with pytest.raises(GeoGraphError, match="not found"):
        read_graph("/nonexistent/graph.geojson")


def test_geographic_mode_survives():
    g = GeoGraph()
    g.add_node(1, GeoPoint(-43.2, -22.9))
    g.meta["mode"] = "geographic"
    assert nodes_to_features(g).mode == "geographic"
