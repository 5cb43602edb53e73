"""Toolkit for (geo)graphs: graphs whose nodes have geographic locations.

GIS layers (shapefiles, OSM XML) become graphs with centrality metrics, and
graphs (adjacency matrices, flow and correlation networks) become GIS layers.
"""

from .errors import GeoGraphError, InvariantViolation
from .geo_model import (AdjacencyMatrix, Feature, FeatureCollection, Field, FieldSchema,
                        GeoGraph, GeoPoint, PolyLine, graph_add_edge, graph_bbox,
                        validate_adjacency)
from .gis_export import (ExportStyle, edges_to_features, from_geojson, nodes_to_features,
                         to_geojson)
from .graph_extract import (build_spatial_index, features_to_geograph, find_connections,
                            representative_point)
from .graph_metrics import (MetricVector, attach_metrics, betweenness,
                            clustering_coefficient, degree, shortest_paths)
from .network_builders import (ODMatrix, Threshold, TimeSeriesSet, correlation_network,
                               flow_network, graph_from_adjacency, pearson)
from .osm_ingest import aggregate_streets, parse_osm, split_ways_at_crossroads
from .shapefile_io import ShapefileTriplet, read_dbf_schema, read_shapefile, write_shapefile

__version__ = "0.1.0"
