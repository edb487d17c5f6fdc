"""Directed road graph: nodes, edges, live speeds, and the JSON loader.

The graph is read-mostly. Speed updates go through update_edge_speed under
the graph lock (single-writer contract); routing takes a consistent speed
snapshot under the same lock, so a query never sees an edge mid-update.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

from ..geo import GeoPoint


class GraphError(ValueError):
    """Malformed graph document or violated graph invariant."""


class UnknownNodeError(KeyError):
    def __init__(self, node_id: str):
        super().__init__(node_id)
        self.node_id = node_id


class UnknownEdgeError(KeyError):
    def __init__(self, edge_id: str):
        super().__init__(edge_id)
        self.edge_id = edge_id


@dataclass(frozen=True)
class RoadNode:
    id: str
    position: GeoPoint


@dataclass
class RoadEdge:
    """One directed road segment. current_speed is the platform's live belief,
    kept in (0, free_flow_speed] by construction."""

    id: str
    from_node: str
    to_node: str
    length_m: float
    free_flow_speed_ms: float
    current_speed_ms: float = 0.0

    def __post_init__(self):
        if self.length_m <= 0:
            raise GraphError(f"edge {self.id!r}: length must be > 0, got {self.length_m}")
        if self.free_flow_speed_ms <= 0:
            raise GraphError(
                f"edge {self.id!r}: free_flow_speed must be > 0, got {self.free_flow_speed_ms}"
            )
        if self.from_node == self.to_node:
            raise GraphError(f"edge {self.id!r}: from and to are both {self.from_node!r}")
        if self.current_speed_ms == 0.0:
            self.current_speed_ms = self.free_flow_speed_ms
        if not 0 < self.current_speed_ms <= self.free_flow_speed_ms:
            raise GraphError(
                f"edge {self.id!r}: current_speed {self.current_speed_ms} outside "
                f"(0, {self.free_flow_speed_ms}]"
            )


@dataclass(frozen=True)
class SpeedSample:
    """A single probe measurement attributed to an edge."""

    edge_id: str
    timestamp: float
    speed_ms: float
    vehicle_id: str

    def __post_init__(self):
        if self.speed_ms < 0:
            raise ValueError(f"speed sample for {self.edge_id!r}: speed {self.speed_ms} < 0")


# speed aggregation constants: trailing window, floor, and the per-call
# recovery factor applied when the window is empty
SPEED_WINDOW_S = 60.0
SPEED_FLOOR_MS = 0.5
SPEED_DECAY_FACTOR = 0.5


class RoadGraph:
    def __init__(self, nodes: list[RoadNode], edges: list[RoadEdge]):
        self.nodes: dict[str, RoadNode] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise GraphError(f"duplicate node id {n.id!r}")
            self.nodes[n.id] = n
        self.edges: dict[str, RoadEdge] = {}
        self.adjacency: dict[str, list[RoadEdge]] = {nid: [] for nid in self.nodes}
        for e in edges:
            if e.id in self.edges:
                raise GraphError(f"duplicate edge id {e.id!r}")
            for endpoint in (e.from_node, e.to_node):
                if endpoint not in self.nodes:
                    raise GraphError(f"edge {e.id!r} references missing node {endpoint!r}")
            self.edges[e.id] = e
            self.adjacency[e.from_node].append(e)
        # deterministic neighbor expansion: lexicographic edge id
        for nid in self.adjacency:
            self.adjacency[nid].sort(key=lambda edge: edge.id)
        self._lock = threading.RLock()

    @property
    def lock(self) -> threading.RLock:
        return self._lock

    def node(self, node_id: str) -> RoadNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def edge(self, edge_id: str) -> RoadEdge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise UnknownEdgeError(edge_id) from None

    def speed_snapshot(self) -> dict[str, float]:
        """Consistent copy of all current speeds, taken under the graph lock."""
        with self._lock:
            return {eid: e.current_speed_ms for eid, e in self.edges.items()}

    def set_current_speed(self, edge_id: str, speed_ms: float) -> None:
        with self._lock:
            e = self.edge(edge_id)
            e.current_speed_ms = min(max(speed_ms, SPEED_FLOOR_MS), e.free_flow_speed_ms)

    def edge_midpoint(self, edge_id: str) -> GeoPoint:
        e = self.edge(edge_id)
        a = self.nodes[e.from_node].position
        b = self.nodes[e.to_node].position
        return GeoPoint((a.lat + b.lat) / 2.0, (a.lon + b.lon) / 2.0)


def edge_travel_time(edge: RoadEdge) -> float:
    """Seconds to traverse the edge at its current speed."""
    return edge.length_m / edge.current_speed_ms


def update_edge_speed(
    graph: RoadGraph,
    edge_id: str,
    samples: list[SpeedSample],
    now: float | None = None,
) -> float:
    """Fold probe samples into the edge's live speed; returns the new value.

    The new speed is the mean of samples inside the trailing 60 s window,
    clamped to [0.5 m/s, free-flow]. With nothing in the window the belief
    recovers toward free-flow by half the remaining gap per call.
    """
    with graph.lock:
        edge = graph.edge(edge_id)
        for s in samples:
            if s.edge_id != edge_id:
                raise ValueError(f"sample for {s.edge_id!r} passed to update of {edge_id!r}")
        cutoff_ref = now if now is not None else max((s.timestamp for s in samples), default=0.0)
        window = [s for s in samples if s.timestamp >= cutoff_ref - SPEED_WINDOW_S]
        if window:
            mean = sum(s.speed_ms for s in window) / len(window)
            new_speed = min(max(mean, SPEED_FLOOR_MS), edge.free_flow_speed_ms)
        else:
            new_speed = edge.current_speed_ms + SPEED_DECAY_FACTOR * (
                edge.free_flow_speed_ms - edge.current_speed_ms
            )
        edge.current_speed_ms = new_speed
        return new_speed


def _require(obj: dict, key: str, context: str):
    if key not in obj:
        raise GraphError(f"{context}: missing field {key!r}")
    return obj[key]


def load_graph(document: str | bytes | dict) -> RoadGraph:
    """Parse and validate the JSON graph format.

    {"nodes": [{"id", "lat", "lon"}...],
     "edges": [{"id", "from", "to", "length_m", "free_flow_speed_ms"}...]}
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise GraphError(f"graph document is not valid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise GraphError("graph document must be a JSON object")

    nodes = []
    for raw in _require(doc, "nodes", "graph"):
        nid = str(_require(raw, "id", "node"))
        try:
            pos = GeoPoint(float(_require(raw, "lat", f"node {nid!r}")),
                           float(_require(raw, "lon", f"node {nid!r}")))
        except ValueError as exc:
            raise GraphError(f"node {nid!r}: {exc}") from exc
        nodes.append(RoadNode(nid, pos))

    edges = []
    for raw in _require(doc, "edges", "graph"):
        eid = str(_require(raw, "id", "edge"))
        edges.append(
            RoadEdge(
                id=eid,
                from_node=str(_require(raw, "from", f"edge {eid!r}")),
                to_node=str(_require(raw, "to", f"edge {eid!r}")),
                length_m=float(_require(raw, "length_m", f"edge {eid!r}")),
                free_flow_speed_ms=float(_require(raw, "free_flow_speed_ms", f"edge {eid!r}")),
            )
        )
    return RoadGraph(nodes, edges)
