"""Minimum-travel-time routing on the live graph.

Edge weight is the instantaneous travel time at query instant. Plain
Dijkstra with a lexicographic node-id tie-break keeps results deterministic;
parallel equal-cost edges resolve to the lexicographically smallest edge id
because adjacency lists are sorted and relaxation is strict-improvement only.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .graph import RoadGraph


class NoPathError(Exception):
    def __init__(self, origin: str, dest: str):
        super().__init__(f"no path from {origin!r} to {dest!r}")
        self.origin = origin
        self.dest = dest


@dataclass(frozen=True)
class Route:
    """An ordered edge chain with totals frozen at computation instant."""

    edge_ids: tuple[str, ...]
    total_length_m: float
    total_time_s: float

    @property
    def empty(self) -> bool:
        return not self.edge_ids


EMPTY_ROUTE = Route((), 0.0, 0.0)


def build_route(graph: RoadGraph, edge_ids: list[str] | tuple[str, ...],
                speeds: dict[str, float] | None = None) -> Route:
    """Assemble a Route from an edge chain, checking connectivity."""
    if not edge_ids:
        return EMPTY_ROUTE
    speeds = speeds if speeds is not None else graph.speed_snapshot()
    total_len = 0.0
    total_time = 0.0
    prev_to: str | None = None
    for eid in edge_ids:
        e = graph.edge(eid)
        if prev_to is not None and e.from_node != prev_to:
            raise ValueError(f"edge chain breaks at {eid!r}: starts at {e.from_node!r}, "
                             f"previous edge ended at {prev_to!r}")
        prev_to = e.to_node
        total_len += e.length_m
        total_time += e.length_m / speeds[eid]
    return Route(tuple(edge_ids), total_len, total_time)


def shortest_path(graph: RoadGraph, origin: str, dest: str,
                  speeds: dict[str, float] | None = None) -> Route:
    """Minimum-total-time route from origin to dest at current edge speeds.

    origin == dest yields the empty route. Raises NoPathError when dest is
    unreachable, UnknownNodeError for missing endpoints. An explicit speed
    snapshot may be passed so several queries share one consistent view.
    """
    graph.node(origin)
    graph.node(dest)
    if origin == dest:
        return EMPTY_ROUTE
    if speeds is None:
        speeds = graph.speed_snapshot()

    dist: dict[str, float] = {origin: 0.0}
    prev_edge: dict[str, str] = {}
    settled: set[str] = set()
    heap: list[tuple[float, str]] = [(0.0, origin)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if u == dest:
            break
        for e in graph.adjacency[u]:
            v = e.to_node
            if v in settled:
                continue
            nd = d + e.length_m / speeds[e.id]
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                prev_edge[v] = e.id
                heapq.heappush(heap, (nd, v))

    if dest not in prev_edge:
        raise NoPathError(origin, dest)
    chain: list[str] = []
    node = dest
    while node != origin:
        eid = prev_edge[node]
        chain.append(eid)
        node = graph.edges[eid].from_node
    chain.reverse()
    return build_route(graph, chain, speeds)
