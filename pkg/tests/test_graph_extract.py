import math
import random

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from geographs.errors import GeoGraphError
from geographs.geo_model import Feature, FeatureCollection, Field, FieldSchema, GeoPoint, PolyLine
from geographs.graph_extract import (build_spatial_index, features_to_geograph, find_connections,
                                     iter_segments, orient, point_within, representative_point,
                                     segment_intersection)

from oracles import brute_connections, point_polyline_distance
from strategies import random_lines

SCHEMA = FieldSchema([Field("id", "integer", 10)])


def lines(*coords_lists):
    return FeatureCollection(SCHEMA, "polyline",
                             [Feature(PolyLine([c]), [k]) for k, c in enumerate(coords_lists)])


def test_cross_connects_with_crossing_witness():
    c = lines([(0, 0), (2, 2)], [(0, 2), (2, 0)])
    conns = find_connections(c)
    assert [(k.i, k.j, k.witness.as_tuple()) for k in conns] == [(0, 1, (1.0, 1.0))]


def test_parallel_lines_do_not_connect():
    c = lines([(0, 0), (2, 0)], [(0, 1), (2, 1)])
    assert find_connections(c, tol=0.0) == []
    assert find_connections(c, tol=0.5) == []
    assert len(find_connections(c, tol=1.0)) == 1


def test_touching_endpoint_and_collinear_overlap():
    touch = lines([(0, 0), (1, 0)], [(1, 0), (1, 5)])
    assert find_connections(touch)[0].witness == GeoPoint(1, 0)
    overlap = lines([(0, 0), (4, 0)], [(2, 0), (6, 0)])
    assert find_connections(overlap)[0].witness == GeoPoint(3, 0)


def test_endpoint_mode_ignores_interior_crossing():
    c = lines([(0, 0), (2, 2)], [(0, 2), (2, 0)])
    assert find_connections(c, mode="endpoint") == []
    t = lines([(0, 0), (2, 0)], [(1, 0), (1, 3)])
    assert [(k.i, k.j) for k in find_connections(t, mode="endpoint")] == [(0, 1)]


def test_bad_arguments():
    c = lines([(0, 0), (1, 0)])
    with pytest.raises(GeoGraphError):
        find_connections(c, tol=-1)
    with pytest.raises(GeoGraphError):
        find_connections(c, mode="fuzzy")
    with pytest.raises(GeoGraphError):
        build_spatial_index(c, cell_size=0)


def test_orient_exact_near_degenerate():
    # 0.1 and 0.3 are not exact in binary; the exact fallback sees the tiny offset
    assert orient((0, 0), (0.1, 0.1), (0.3, 0.3)) == 0
    assert orient((0, 0), (0.1, 0.3), (0.3, 0.9)) != 0
    assert orient((0, 0), (1, 1), (3, 3)) == 0
    assert orient((0, 0), (1, 0), (0.5, 1e-300)) == 1


def test_point_within_boundary_is_inclusive():
    assert point_within((0, 1), (-1, 0), (1, 0), 1.0) == (0, 0.5)
    assert point_within((0, 1.0000001), (-1, 0), (1, 0), 1.0) is None


def test_segment_intersection_cases():
    assert segment_intersection((0, 0), (1, 0), (2, 0), (3, 0)) is None
    assert segment_intersection((0, 0), (1, 0), (1, 0), (3, 0)) == (1.0, 0.0)
    assert segment_intersection((0, 0), (0, 2), (-1, 1), (1, 1)) == (0.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.05, 5), st.sampled_from([0.0, 1e-6, 0.05]))
def test_index_query_is_superset_of_bbox_overlap(seed, cell, pad):
    rnd = random.Random(seed)
    c = random_lines(rnd, 12, 60)
    idx = build_spatial_index(c, cell)
    segs = {(fi, pi, si): (a, b) for fi, f in enumerate(c.features)
            for pi, si, a, b in iter_segments(f.geometry)}
    for _ in range(10):
        x, y = rnd.uniform(-1, 11), rnd.uniform(-1, 11)
        box = (x - pad, y - pad, x + rnd.uniform(0, 3) + pad, y + rnd.uniform(0, 3) + pad)
        want = {r for r, (a, b) in segs.items()
                if min(a[0], b[0]) <= box[2] and max(a[0], b[0]) >= box[0]
                and min(a[1], b[1]) <= box[3] and max(a[1], b[1]) >= box[1]}
        assert want <= idx.query(box)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([0.0, 1e-6, 0.05]),
       st.sampled_from(["geometric", "endpoint"]))
def test_matches_exact_brute_force(seed, tol, mode):
    c = random_lines(random.Random(seed), 10, 40)
    got = {(k.i, k.j) for k in find_connections(c, tol=tol, mode=mode)}
    assert got == brute_connections(c, tol, mode)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([0.0, 0.05]))
def test_independent_of_cell_size(seed, tol):
    c = random_lines(random.Random(seed), 10, 40)
    base = find_connections(c, tol=tol)
    for cell in (0.1, 1.0, 50.0):
        assert find_connections(c, build_spatial_index(c, cell), tol) == base


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32))
def test_relabeling_permutes_connections(seed):
    rnd = random.Random(seed)
    c = random_lines(rnd, 9, 30)
    perm = list(range(len(c)))
    rnd.shuffle(perm)
    shuffled = FeatureCollection(SCHEMA, "polyline", [c.features[p] for p in perm])
    inv = {new: old for new, old in enumerate(perm)}
    mapped = {tuple(sorted((inv[k.i], inv[k.j]))) for k in find_connections(shuffled, tol=0.05)}
    assert mapped == {(k.i, k.j) for k in find_connections(c, tol=0.05)}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["geometric", "endpoint"]))
def test_witness_lies_near_both_features(seed, mode):
    c = random_lines(random.Random(seed), 8, 30)
    tol = 0.05
    for k in find_connections(c, tol=tol, mode=mode):
        for f in (c.features[k.i], c.features[k.j]):
            assert point_polyline_distance(k.witness.as_tuple(), f.geometry) <= tol + 1e-9


def test_representative_point_midway_along_longest_part():
    assert representative_point(PolyLine([[(0, 0), (2, 0)]])) == GeoPoint(1, 0)
    line = PolyLine([[(0, 0), (0, 1)], [(5, 5), (5, 8), (9, 8)]])
    assert representative_point(line) == GeoPoint(5.5, 8)
    assert representative_point(GeoPoint(3, 4)) == GeoPoint(3, 4)


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=2, max_size=8))
def test_representative_point_on_geometry(points):
    line = PolyLine([points])
    p = representative_point(line)
    scale = max(1.0, max(abs(v) for pt in points for v in pt))
    assert point_polyline_distance(p.as_tuple(), line) <= 1e-9 * scale


def test_features_to_geograph():
    c = lines([(0, 0), (2, 2)], [(0, 2), (2, 0)], [(10, 10), (11, 10)])
    g = features_to_geograph(c, find_connections(c))
    assert g.node_ids() == [0, 1, 2]
    assert [(e.u, e.v) for e in g.edges()] == [(0, 1)]
    e = g.edge(0, 1)
    assert (e.attributes["witness_x"], e.attributes["witness_y"], e.weight) == (1.0, 1.0, 1.0)
    assert g.nodes[2].attributes == {"id": 2}
    assert math.isclose(g.nodes[2].location.x, 10.5)


def test_index_cell_coverage():
    c = lines([(0, 0), (1, 0)])
    idx = build_spatial_index(c, 0.5)
    assert sorted(cell for cell, refs in idx.cells.items() if refs) == [(0, 0), (1, 0), (2, 0)]
    assert idx.candidates_at(10, 10) == []
    assert idx.candidates_at(0.7, 0) == [(0, 0, 0)]


def test_crossing_example_and_unit_distance():
    c = lines([(0, 0), (2, 0)], [(1, -1), (1, 1)])
    assert find_connections(c)[0].witness == GeoPoint(1, 0)
    p = lines([(0, 0), (1, 0)], [(0, 1), (1, 1)])
    assert find_connections(p, tol=0) == [] and len(find_connections(p, tol=1)) == 1


def test_short_segments_in_unit_square_match_oracle():
    rnd = random.Random(50)
    segs = []
    for _ in range(50):
        x, y = rnd.random(), rnd.random()
        segs.append([(x, y), (x + rnd.uniform(-0.1, 0.1), y + rnd.uniform(-0.1, 0.1))])
    c = lines(*segs)
    got = {(k.i, k.j) for k in find_connections(c, tol=0.01)}
    assert got == brute_connections(c, 0.01, "geometric")


def test_path_and_empty_graphs_from_connections():
    c = lines([(0, 0), (1, 0)], [(1, 0), (2, 0)], [(2, 0), (3, 0)])
    g = features_to_geograph(c, find_connections(c))
    assert [(e.u, e.v) for e in g.edges()] == [(0, 1), (1, 2)]
    assert features_to_geograph(c, []).number_of_edges() == 0


def test_three_by_three_grid_graph():
    from geographs.osm_ingest import osm_streets
    from geographs.synthetic import street_grid_osm
    c, conns = osm_streets(street_grid_osm(3, avenue=False))
    g = features_to_geograph(c, conns)
    assert (g.number_of_nodes(), g.number_of_edges()) == (6, 9)


def test_representative_point_walks_the_corner():
    assert representative_point(PolyLine([[(0, 0), (1, 0), (1, 1)]])) == GeoPoint(1, 0)
