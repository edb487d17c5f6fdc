"""Deterministic fixed-step vehicle simulator.

Point-mass vehicles traverse their planned routes, emit CAMs on a fixed
cadence, stop at red signals, and honor speed/reroute/GLOSA advisories per
their compliance flags. A run is a pure function of (scenario, seed):
vehicles step in id order, message ids come from seeded factories, and any
randomness draws from the scenario seed.

Disturbances model ground truth: SlowEdge caps the physical speed on an
edge, and the platform only learns about it the honest way, through the
CAM stream.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from ..codec import encode
from ..config import PlatformConfig
from ..fleet.entities import StopStatus
from ..geo import GeoPoint, initial_bearing_deg, interpolate
from ..geomessenger import EventSource, TrafficEvent
from ..messages import (
    CamMessage,
    IvimKind,
    IvimMessage,
    MessageIdFactory,
    PriorityDirection,
    PriorityMessage,
    RelevanceZone,
)
from ..network import load_graph
from ..platform import Platform, load_gazetteer
from ..signals import Phase, load_signal_plans
from .scenario import InjectEvent, Scenario, SlowEdge, StopVehicle

GLOSA_CONSULT_DISTANCE_M = 500.0
PRIORITY_REQUEST_DISTANCE_M = 500.0


@dataclass
class SimVehicle:
    vehicle_id: str
    trip_id: str
    spec_index: int
    route: tuple[str, ...]
    edge_pos: int = 0
    offset_m: float = 0.0
    speed_ms: float = 0.0
    started: bool = False
    done: bool = False
    arrival_time: float | None = None
    final_cam_sent: bool = False
    cam_next_at: float = 0.0
    moved_m: float = 0.0
    stopped_until: float = 0.0
    glosa_hold: dict = field(default_factory=dict)
    priority_sent: set = field(default_factory=set)
    active_speed_cap: tuple[float, float] | None = None  # (speed, valid_to)
    sub_id: str = ""
    rng: random.Random = field(default_factory=random.Random)


@dataclass
class SimReport:
    scenario_name: str
    seed: int
    arrivals: dict
    eta_at_start: dict
    eta_error: dict
    trip_stats: dict
    cam_log: list
    published: list
    crossings: list
    priority_log: list
    counters: dict

    def to_doc(self) -> dict:
        return {
            "scenario": self.scenario_name,
            "seed": self.seed,
            "arrivals": self.arrivals,
            "eta_at_start": self.eta_at_start,
            "eta_error": self.eta_error,
            "trip_stats": self.trip_stats,
            "counters": self.counters,
            "crossings": self.crossings,
            "priority": self.priority_log,
            "published": self.published,
            "cam_log": self.cam_log,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True, separators=(",", ":"))


class SimEngine:
    def __init__(self, scenario: Scenario, platform: Platform | None = None):
        scenario.validate()
        self.scenario = scenario
        if platform is None:
            config = PlatformConfig.from_dict(scenario.config_overrides)
            graph = load_graph(scenario.graph_path.read_text(encoding="utf-8"))
            plans = {}
            if scenario.signals_path:
                plans = load_signal_plans(scenario.signals_path.read_text(encoding="utf-8"))
            gazetteer = {}
            if scenario.gazetteer_path:
                gazetteer = load_gazetteer(scenario.gazetteer_path.read_text(encoding="utf-8"))
            platform = Platform(graph, plans, config, gazetteer, seed=scenario.seed,
                                auto_complete_stops=True)
        self.platform = platform
        self.graph = platform.graph
        self.signal_node_index = self._index_signal_nodes()
        self.ground_caps: dict[str, float] = {}
        self.vehicles: list[SimVehicle] = []
        self.cam_log: list[dict] = []
        self.odometry: list[tuple[str, float, float]] = []  # (vehicle, t, moved_m)
        self.published: list[dict] = []
        self.crossings: list[dict] = []
        self.priority_log: list[dict] = []
        self._ids = MessageIdFactory(f"{scenario.seed}/sim")
        self._applied_disturbances: set[int] = set()
        self._monitor_sub = ""
        self.now = scenario.start_time  # the sim clock, readable from outside
        self._setup()

    def _index_signal_nodes(self) -> dict[str, str]:
        """intersection -> graph node it sits on (desk-scale: within 5 m)."""
        from ..geo import haversine_m

        index = {}
        for plan in self.platform.signals.plans.values():
            best = min(self.graph.nodes.values(),
                       key=lambda n: haversine_m(n.position, plan.position),
                       default=None)
            if best is not None and haversine_m(best.position, plan.position) <= 5.0:
                index[best.id] = plan.intersection_id
        return index

    def _network_zone(self) -> RelevanceZone:
        lats = [n.position.lat for n in self.graph.nodes.values()]
        lons = [n.position.lon for n in self.graph.nodes.values()]
        center = GeoPoint(sum(lats) / len(lats), sum(lons) / len(lons))
        return RelevanceZone(center, 50_000.0)

    def _setup(self):
        sc = self.scenario
        fleet = self.platform.fleet
        t0 = sc.start_time
        trip_by_vehicle = {t.vehicle_index: t for t in sc.trips}
        zone = self._network_zone()
        self._monitor_sub = self.platform.broker.subscribe(
            "sim-monitor", zone, {"IVIM", "HAZARD", "PRIORITY"}, now=t0)

        for i, spec in enumerate(sc.vehicles):
            driver_id = fleet.register_driver(spec.driver_name, spec.driver_phone, t0)
            vehicle_id = fleet.register_vehicle(spec.plate, spec.color, t0)
            fleet.assign_driver(vehicle_id, driver_id, t0)
            trip_spec = trip_by_vehicle.get(i)
            if trip_spec is None:
                continue
            trip = fleet.create_trip(vehicle_id, list(trip_spec.stops), trip_spec.depart, t0)
            sub_id = self.platform.broker.subscribe(vehicle_id, zone, {"IVIM", "HAZARD"},
                                                    now=t0)
            self.vehicles.append(SimVehicle(
                vehicle_id=vehicle_id,
                trip_id=trip.trip_id,
                spec_index=i,
                route=trip.route.edge_ids,
                offset_m=spec.start_edge_offset_m,
                cam_next_at=t0 + spec.start_delay_s + sc.cam_interval_s,
                sub_id=sub_id,
                rng=random.Random(f"{sc.seed}/{vehicle_id}"),
            ))
        self.vehicles.sort(key=lambda v: v.vehicle_id)

    # ---- per-step pieces ----

    def _apply_disturbances(self, t: float):
        for i, d in enumerate(self.scenario.disturbances):
            if i in self._applied_disturbances or d.at_s > t + 1e-9:
                continue
            self._applied_disturbances.add(i)
            if isinstance(d, SlowEdge):
                edge = self.graph.edge(d.edge_id)
                self.ground_caps[d.edge_id] = d.factor * edge.free_flow_speed_ms
            elif isinstance(d, StopVehicle):
                for v in self.vehicles:
                    if v.spec_index == d.vehicle_index:
                        v.stopped_until = t + d.duration_s
            elif isinstance(d, InjectEvent):
                self._inject_event(d.event, t)

    def _inject_event(self, doc: dict, now: float):
        zone_doc = doc["zone"]
        event = TrafficEvent(
            event_id=doc.get("event_id", ""),
            cause=doc["cause"],
            zone=RelevanceZone(GeoPoint(float(zone_doc["center"]["lat"]),
                                        float(zone_doc["center"]["lon"])),
                               float(zone_doc["radius_m"])),
            valid_from=float(doc["valid_from"]),
            valid_to=float(doc["valid_to"]),
            source=EventSource(doc.get("source", "Manual")),
            free_text=doc.get("free_text"),
        )
        self.platform.geomessenger.register_event(event, now)

    def _drain_advisories(self, v: SimVehicle, spec, t: float):
        for msg in self.platform.broker.drain(v.sub_id):
            if isinstance(msg, IvimMessage) and msg.kind is IvimKind.SpeedAdvisory \
                    and spec.obeys_speed_advisory:
                if msg.zone.contains(self._position(v)) and msg.valid_from <= t <= msg.valid_to:
                    v.active_speed_cap = (msg.payload["advised_speed_ms"], msg.valid_to)

    def _current_edge(self, v: SimVehicle):
        return self.graph.edge(v.route[min(v.edge_pos, len(v.route) - 1)])

    def _position(self, v: SimVehicle) -> GeoPoint:
        edge = self._current_edge(v)
        a = self.graph.node(edge.from_node).position
        b = self.graph.node(edge.to_node).position
        return interpolate(a, b, v.offset_m / edge.length_m)

    def _heading(self, v: SimVehicle) -> float:
        edge = self._current_edge(v)
        return initial_bearing_deg(self.graph.node(edge.from_node).position,
                                   self.graph.node(edge.to_node).position)

    def _signal_at_edge_end(self, edge_id: str):
        edge = self.graph.edge(edge_id)
        intersection_id = self.signal_node_index.get(edge.to_node)
        if intersection_id is None:
            return None
        plan = self.platform.signals.plans[intersection_id]
        for a in plan.approaches:
            if a.approach_id == edge_id:
                return intersection_id, edge_id
        return None

    def _pure_target(self, v: SimVehicle, spec, t: float,
                     with_glosa: bool = True) -> float:
        """Speed the vehicle holds at instant t on its current edge; no side
        effects, so it doubles as the instantaneous speed a CAM reports.

        Vehicles drive the road's physical speed (free-flow, cut by ground
        disturbances), never the platform's CAM-derived belief: reading the
        belief back would make any transient slowdown self-reinforcing.
        """
        if v.stopped_until > t + 1e-9:
            return 0.0
        edge = self.graph.edge(v.route[v.edge_pos])
        target = edge.free_flow_speed_ms
        cap = self.ground_caps.get(edge.id)
        if cap is not None:
            target = min(target, cap)
        if v.active_speed_cap is not None:
            speed, valid_to = v.active_speed_cap
            if t <= valid_to:
                target = min(target, speed)
            else:
                v.active_speed_cap = None
        if with_glosa:
            signal = self._signal_at_edge_end(edge.id)
            if signal is not None:
                held = v.glosa_hold.get(signal[0])
                if held is not None:
                    target = min(target, held)
        return target

    def _consult_signals(self, v: SimVehicle, spec, t: float) -> None:
        """Once-per-approach GLOSA consultation and priority request."""
        edge = self.graph.edge(v.route[v.edge_pos])
        signal = self._signal_at_edge_end(edge.id)
        if signal is None:
            return
        base = self._pure_target(v, spec, t, with_glosa=False)
        if base <= 0:
            return
        intersection_id, approach_id = signal
        dist = edge.length_m - v.offset_m
        if spec.obeys_glosa and 0 < dist <= GLOSA_CONSULT_DISTANCE_M \
                and intersection_id not in v.glosa_hold:
            v.glosa_hold[intersection_id] = self.platform.signals.advice(
                intersection_id, approach_id, dist, t,
                self.platform.config.signals.glosa_min_speed_ms, base)
        if spec.requests_priority and 0 < dist <= PRIORITY_REQUEST_DISTANCE_M \
                and intersection_id not in v.priority_sent:
            v.priority_sent.add(intersection_id)
            speed = self._pure_target(v, spec, t)
            request = PriorityMessage(
                self._ids.next(), PriorityDirection.Request, v.vehicle_id,
                intersection_id, approach_id, t + dist / speed)
            response = self.platform.signals.request_priority(request, now=t)
            grant = self.platform.signals.active_grant(intersection_id, t)
            extension = grant.extension_s if grant is not None \
                and grant.vehicle_id == v.vehicle_id else 0.0
            self.priority_log.append({
                "t": t, "vehicle_id": v.vehicle_id,
                "intersection_id": intersection_id,
                "predicted_arrival": request.predicted_arrival,
                "verdict": response.verdict.value,
                "extension_s": extension,
            })

    def _advance(self, v: SimVehicle, spec, t: float, dt: float) -> None:
        """Move along the route with edge carry-over; signals gate crossings.
        Afterwards v.speed_ms is the instantaneous speed at the new position
        (zero when held at a red stop line)."""
        self._consult_signals(v, spec, t)
        speed = self._pure_target(v, spec, t)
        v.speed_ms = speed
        budget = speed * dt
        progressed = 0.0
        while budget > 0 and not v.done:
            edge = self.graph.edge(v.route[v.edge_pos])
            to_line = edge.length_m - v.offset_m
            if budget < to_line:
                v.offset_m += budget
                v.moved_m += budget
                break
            signal = self._signal_at_edge_end(edge.id)
            if signal is not None:
                intersection_id, approach_id = signal
                phase, _ = self.platform.signals.state(intersection_id, approach_id, t)
                if phase is Phase.Red:
                    v.moved_m += to_line
                    v.offset_m = edge.length_m  # hold at the stop line
                    v.speed_ms = 0.0
                    return
                self.crossings.append({
                    "t": t + (progressed + to_line) / speed if speed > 0 else t,
                    "vehicle_id": v.vehicle_id,
                    "intersection_id": intersection_id,
                    "phase": phase.value,
                })
                v.glosa_hold.pop(intersection_id, None)
            v.moved_m += to_line
            progressed += to_line
            budget -= to_line
            if v.edge_pos + 1 >= len(v.route):
                v.done = True
                v.offset_m = edge.length_m
                v.arrival_time = t + progressed / speed if speed > 0 else t
                return
            v.edge_pos += 1
            v.offset_m = 0.0
        if not v.done:
            # speed changes take effect instantly on edge transfer; the CAM
            # reports the speed at the new position, not the stale step speed
            v.speed_ms = self._pure_target(v, spec, t)

    def _emit_cam(self, v: SimVehicle, t: float):
        pos = self._position(v)
        msg = CamMessage(
            station_id=v.vehicle_id, vehicle_id=v.vehicle_id, trip_id=v.trip_id,
            driver_id=self.platform.fleet.trips[v.trip_id].driver_id,
            timestamp=t, position=pos, speed_ms=v.speed_ms, heading_deg=self._heading(v))
        self.platform.fleet.ingest_cam(msg)
        self.platform.broker.publish(msg, sender_position=pos, now=t)
        self.cam_log.append(json.loads(encode(msg)))
        self.odometry.append((v.vehicle_id, t, v.moved_m))

    def _sync_route(self, v: SimVehicle, spec):
        """Pick up fleet-applied reroutes (compliant vehicles only)."""
        if not spec.obeys_reroute:
            return
        trip = self.platform.fleet.trips[v.trip_id]
        if trip.route.edge_ids == v.route:
            return
        current_edge = v.route[v.edge_pos]
        new_route = trip.route.edge_ids
        if current_edge in new_route:
            v.edge_pos = new_route.index(current_edge)
            v.route = new_route
        # otherwise the vehicle is already past the replacement's start; keep going

    def _drain_monitor(self, t: float):
        for msg in self.platform.broker.drain(self._monitor_sub):
            self.published.append({"t": t, "message": json.loads(encode(msg))})

    # ---- main loop ----

    def run(self, pace_s: float | None = None) -> SimReport:
        """Execute the scenario; pace_s sleeps that long per step (live mode)."""
        import time as _time

        sc = self.scenario
        fleet = self.platform.fleet
        t = sc.start_time
        end = sc.start_time + sc.duration_s
        eta_at_start: dict[str, float] = {}
        completed: set[str] = set()
        next_tick = sc.start_time

        while t < end - 1e-9:
            if pace_s:
                _time.sleep(pace_s)
            self.now = t
            self._apply_disturbances(t)
            if t >= next_tick - 1e-9:
                self.platform.tick(t)
                next_tick += 1.0
            for v in self.vehicles:
                spec = sc.vehicles[v.spec_index]
                if not v.started:
                    if t + 1e-9 >= sc.start_time + spec.start_delay_s:
                        v.started = True
                        fleet.start_trip(v.trip_id, t)
                        etas = fleet.eta(v.trip_id, t)
                        if etas:
                            eta_at_start[v.trip_id] = etas[-1][1]
                    else:
                        continue
                if v.done and v.final_cam_sent:
                    continue
                if not v.done:
                    self._sync_route(v, spec)
                    self._drain_advisories(v, spec, t)
                    self._advance(v, spec, t, sc.dt_s)
                emitted = False
                if not v.final_cam_sent and t + sc.dt_s + 1e-9 >= v.cam_next_at:
                    self._emit_cam(v, t + sc.dt_s)
                    v.cam_next_at += sc.cam_interval_s
                    emitted = True
                if v.done and not v.final_cam_sent:
                    if not emitted:
                        self._emit_cam(v, t + sc.dt_s)
                    v.final_cam_sent = True
                    trip = fleet.trips[v.trip_id]
                    if v.trip_id not in completed \
                            and all(s.status is StopStatus.Done for s in trip.stops):
                        fleet.complete_trip(v.trip_id, t + sc.dt_s)
                        completed.add(v.trip_id)
            self._drain_monitor(t)
            t += sc.dt_s
        self._drain_monitor(t)

        arrivals = {v.vehicle_id: v.arrival_time for v in self.vehicles
                    if v.arrival_time is not None}
        eta_error = {}
        for v in self.vehicles:
            if v.trip_id in eta_at_start and v.arrival_time is not None:
                eta_error[v.trip_id] = {
                    "eta_at_start": eta_at_start[v.trip_id],
                    "actual": v.arrival_time,
                    "error_s": v.arrival_time - eta_at_start[v.trip_id],
                }
        trip_stats = {tid: fleet.statistics[tid].to_doc()
                      for tid in sorted(fleet.statistics)}
        counters = {
            "cams_emitted": len(self.cam_log),
            "cams_dropped_off_network": self.platform.geomessenger.dropped_cams,
            "published": len(self.published),
            "reroutes": sum(trip.reroute_count for trip in fleet.trips.values()),
            "moved_m": {v.vehicle_id: round(v.moved_m, 3) for v in self.vehicles},
        }
        return SimReport(
            scenario_name=sc.name,
            seed=sc.seed,
            arrivals=arrivals,
            eta_at_start=eta_at_start,
            eta_error=eta_error,
            trip_stats=trip_stats,
            cam_log=self.cam_log,
            published=self.published,
            crossings=self.crossings,
            priority_log=self.priority_log,
            counters=counters,
        )


def run_scenario(path: str | Path, seed: int | None = None,
                 out_path: str | Path | None = None) -> SimReport:
    from .scenario import load_scenario

    scenario = load_scenario(path, seed=seed)
    report = SimEngine(scenario).run()
    if out_path is not None:
        Path(out_path).write_text(report.to_json(), encoding="utf-8")
    return report
