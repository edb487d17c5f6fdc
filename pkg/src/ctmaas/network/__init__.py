from .graph import (
    GraphError,
    RoadEdge,
    RoadGraph,
    RoadNode,
    SpeedSample,
    UnknownEdgeError,
    UnknownNodeError,
    edge_travel_time,
    load_graph,
    update_edge_speed,
)
from .matching import MatchResult, map_match
from .prediction import predict_travel_time
from .routing import NoPathError, Route, shortest_path

__all__ = [
    "GraphError",
    "MatchResult",
    "NoPathError",
    "RoadEdge",
    "RoadGraph",
    "RoadNode",
    "Route",
    "SpeedSample",
    "UnknownEdgeError",
    "UnknownNodeError",
    "edge_travel_time",
    "load_graph",
    "map_match",
    "predict_travel_time",
    "shortest_path",
    "update_edge_speed",
]
