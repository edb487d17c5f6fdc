"""Snap a GPS position to the nearest edge of the road graph."""

from __future__ import annotations

from dataclasses import dataclass

from ..geo import GeoPoint, project_onto_segment
from .graph import RoadGraph

OFF_NETWORK_THRESHOLD_M = 100.0


@dataclass(frozen=True)
class MatchResult:
    """Nearest edge, travel offset from its from-node, and lateral distance.

    on_network is False when the lateral distance exceeds 100 m; the nearest
    candidate is still reported for diagnostics.
    """

    edge_id: str
    offset_m: float
    lateral_m: float
    on_network: bool


def map_match(graph: RoadGraph, p: GeoPoint) -> MatchResult:
    """Nearest edge by perpendicular distance to its local planar segment.

    Offset is the projection parameter times the edge's declared length, so
    a point at the geometric midpoint lands at length/2 even when declared
    and geometric lengths differ slightly. Exact ties break to the
    lexicographically smallest edge id.
    """
    if not graph.edges:
        raise ValueError("cannot map-match against an empty graph")
    best: tuple[float, str] | None = None
    best_offset = 0.0
    for eid in sorted(graph.edges):
        e = graph.edges[eid]
        a = graph.nodes[e.from_node].position
        b = graph.nodes[e.to_node].position
        t, lateral = project_onto_segment(p, a, b)
        key = (lateral, eid)
        if best is None or key < best:
            best = key
            best_offset = t * e.length_m
    lateral, eid = best
    return MatchResult(eid, best_offset, lateral, lateral <= OFF_NETWORK_THRESHOLD_M)
