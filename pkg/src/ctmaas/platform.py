"""Composition root: one process hosting every service behind clean module
boundaries. The HTTP layer and the simulator both drive a Platform; the
former with wall-clock time, the latter with simulated time.
"""

from __future__ import annotations

from pathlib import Path

from .broker import GeoBroker
from .config import PlatformConfig
from .fleet import FleetService
from .geo import GeoPoint
from .geomessenger import Geomessenger
from .hub import EventHub
from .messages import MessageIdFactory
from .network import RoadGraph, load_graph
from .persistence import EventLog
from .signals import SignalService, load_signal_plans


def load_gazetteer(document: str | bytes | dict) -> dict[str, GeoPoint]:
    import json

    doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    return {name: GeoPoint(float(v["lat"]), float(v["lon"])) for name, v in doc.items()}


class Platform:
    def __init__(self, graph: RoadGraph, signal_plans: dict | None = None,
                 config: PlatformConfig | None = None,
                 gazetteer: dict[str, GeoPoint] | None = None,
                 log_path: str | Path | None = None,
                 seed: int | None = None,
                 auto_complete_stops: bool = False):
        self.config = config or PlatformConfig()
        self.graph = graph
        self.hub = EventHub()
        self.log = EventLog(log_path) if log_path else None

        def ids(tag: str) -> MessageIdFactory:
            return MessageIdFactory(None if seed is None else f"{seed}/{tag}")

        self.broker = GeoBroker(hub=self.hub,
                                cam_zone_radius_m=self.config.broker.cam_zone_radius_m)
        self.geomessenger = Geomessenger(graph, self.broker, self.config.geomessenger,
                                         id_factory=ids("gm"))
        self.signals = SignalService(signal_plans or {}, broker=self.broker, hub=self.hub,
                                     max_extension_s=self.config.signals.max_extension_s,
                                     id_factory=ids("sig"))
        self.fleet = FleetService(graph, geomessenger=self.geomessenger, broker=self.broker,
                                  hub=self.hub, log=self.log, config=self.config.fleet,
                                  gazetteer=gazetteer or {}, id_factory=ids("fleet"),
                                  auto_complete_stops=auto_complete_stops)

    @classmethod
    def from_files(cls, graph_path: str | Path, signals_path: str | Path | None = None,
                   config: PlatformConfig | None = None,
                   gazetteer_path: str | Path | None = None,
                   log_path: str | Path | None = None,
                   seed: int | None = None,
                   auto_complete_stops: bool = False) -> "Platform":
        graph = load_graph(Path(graph_path).read_text(encoding="utf-8"))
        plans = None
        if signals_path:
            plans = load_signal_plans(Path(signals_path).read_text(encoding="utf-8"))
        gazetteer = None
        if gazetteer_path:
            gazetteer = load_gazetteer(Path(gazetteer_path).read_text(encoding="utf-8"))
        return cls(graph, plans, config, gazetteer, log_path, seed, auto_complete_stops)

    def tick(self, now: float) -> list:
        """Periodic driver: advisory re-emission, congestion detection, and the
        cadenced reroute sweep."""
        published = self.geomessenger.tick(now)
        self.fleet.check_reroutes(now)
        return published

    def graph_doc(self) -> dict:
        """Network geometry for map rendering."""
        return {
            "nodes": [
                {"id": n.id, "lat": n.position.lat, "lon": n.position.lon}
                for n in self.graph.nodes.values()
            ],
            "edges": [
                {"id": e.id, "from": e.from_node, "to": e.to_node,
                 "length_m": e.length_m, "free_flow_speed_ms": e.free_flow_speed_ms,
                 "current_speed_ms": e.current_speed_ms}
                for e in self.graph.edges.values()
            ],
        }

    def signals_doc(self) -> dict:
        return {
            "intersections": [
                {"id": p.intersection_id, "lat": p.position.lat, "lon": p.position.lon,
                 "cycle_s": p.cycle_s,
                 "approaches": [
                     {"id": a.approach_id, "green_start_s": a.green_start_s,
                      "green_duration_s": a.green_duration_s}
                     for a in p.approaches
                 ]}
                for p in self.signals.plans.values()
            ]
        }
