"""Vehicle, driver, and trip management: UC-style registration, planned and
dynamic routing, live tracking, arrival detection, statistics, and the data
exchange with a traffic management center.

All mutations are serialized behind one service lock (the per-trip command
queue contract collapses to this at desk scale); reads see the latest
committed state.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

from ..config import FleetConfig
from ..geo import GeoPoint, haversine_m
from ..messages import IvimKind, IvimMessage, MessageIdFactory, RelevanceZone
from ..network import (
    NoPathError,
    RoadGraph,
    Route,
    map_match,
    shortest_path,
)
from ..network.routing import build_route
from .entities import (
    Driver,
    FleetError,
    StopStatus,
    TaskKind,
    TaskStop,
    Trip,
    TripState,
    TripStatistics,
    UnknownEntityError,
    Vehicle,
)
from .ordering import order_stops


def round2(x: float) -> float:
    v = round(x, 2)
    return 0.0 if v == 0 else v


@dataclass(frozen=True)
class RerouteProposal:
    proposal_id: str
    trip_id: str
    created_at: float
    expires_at: float
    new_route: Route
    new_legs: tuple[tuple[str, ...], ...]
    old_remaining_s: float
    new_total_s: float

    @property
    def saving_s(self) -> float:
        return self.old_remaining_s - self.new_total_s

    def to_doc(self) -> dict:
        return {
            "proposal_id": self.proposal_id,
            "trip_id": self.trip_id,
            "created_at": self.created_at,
            "expires_at": self.expires_at,
            "edge_ids": list(self.new_route.edge_ids),
            "old_remaining_s": round2(self.old_remaining_s),
            "new_total_s": round2(self.new_total_s),
            "saving_s": round2(self.saving_s),
        }


class FleetService:
    def __init__(self, graph: RoadGraph, geomessenger=None, broker=None, hub=None,
                 log=None, config: FleetConfig | None = None,
                 gazetteer: dict[str, GeoPoint] | None = None,
                 id_factory: MessageIdFactory | None = None,
                 auto_complete_stops: bool = False):
        self.graph = graph
        self.geomessenger = geomessenger
        self.broker = broker
        self.hub = hub
        self.log = log
        self.config = config or FleetConfig()
        self.gazetteer = gazetteer or {}
        self.auto_complete_stops = auto_complete_stops
        self._ids = id_factory or MessageIdFactory()
        self.drivers: dict[str, Driver] = {}
        self.vehicles: dict[str, Vehicle] = {}
        self.trips: dict[str, Trip] = {}
        self.proposals: dict[str, RerouteProposal] = {}
        self.statistics: dict[str, TripStatistics] = {}
        self._plates: set[str] = set()
        self._active_trip_by_vehicle: dict[str, str] = {}
        self._counters = {"driver": 0, "vehicle": 0, "trip": 0, "proposal": 0}
        self._lock = threading.RLock()
        self._last_reroute_check = None

    # ---- persistence helpers ----

    def _persist(self, kind: str, key: str, value: dict, now: float, op: str = "put"):
        if self.log is not None:
            self.log.append(now, "fleet", kind, {"op": op, "key": key, "value": value})

    def _trip_doc(self, trip: Trip) -> dict:
        return {
            "trip_id": trip.trip_id,
            "vehicle_id": trip.vehicle_id,
            "driver_id": trip.driver_id,
            "state": trip.state.value,
            "stops": [
                {"stop_id": s.stop_id, "lat": s.location.lat, "lon": s.location.lon,
                 "task_kind": s.task_kind.value, "status": s.status.value,
                 "node_id": s.node_id, "address": s.address}
                for s in trip.stops
            ],
            "edge_ids": list(trip.route.edge_ids),
            "reroute_count": trip.reroute_count,
        }

    def _persist_trip(self, trip: Trip, now: float):
        self._persist("trip", trip.trip_id, self._trip_doc(trip), now)
        if self.hub is not None:
            self.hub.trip_changed(self._trip_doc(trip), now)

    # ---- registration (UC: fleet data entry) ----

    def register_driver(self, name: str, phone: str, now: float = 0.0) -> str:
        with self._lock:
            self._counters["driver"] += 1
            driver_id = f"drv-{self._counters['driver']:04d}"
            self.drivers[driver_id] = Driver(driver_id, name, phone)
            self._persist("driver", driver_id, {"name": name, "phone": phone}, now)
            return driver_id

    def register_vehicle(self, plate: str, color: str, now: float = 0.0) -> str:
        with self._lock:
            if plate in self._plates:
                raise FleetError(f"plate {plate!r} already registered")
            self._counters["vehicle"] += 1
            vehicle_id = f"veh-{self._counters['vehicle']:04d}"
            self.vehicles[vehicle_id] = Vehicle(vehicle_id, plate, color)
            self._plates.add(plate)
            self._persist("vehicle", vehicle_id, {"plate": plate, "color": color}, now)
            return vehicle_id

    def assign_driver(self, vehicle_id: str, driver_id: str, now: float = 0.0) -> None:
        with self._lock:
            vehicle = self._vehicle(vehicle_id)
            if driver_id not in self.drivers:
                raise UnknownEntityError("driver", driver_id)
            vehicle.assigned_driver = driver_id
            self._persist("vehicle", vehicle_id,
                          {"plate": vehicle.plate, "color": vehicle.color,
                           "assigned_driver": driver_id}, now)

    def _vehicle(self, vehicle_id: str) -> Vehicle:
        try:
            return self.vehicles[vehicle_id]
        except KeyError:
            raise UnknownEntityError("vehicle", vehicle_id) from None

    def trip(self, trip_id: str) -> Trip:
        try:
            return self.trips[trip_id]
        except KeyError:
            raise UnknownEntityError("trip", trip_id) from None

    # ---- trip planning (UC: destinations, dynamic routing) ----

    def resolve_location(self, location) -> tuple[GeoPoint, Optional[str]]:
        """Accept a GeoPoint or a gazetteer address; return (point, address)."""
        if isinstance(location, GeoPoint):
            return location, None
        if isinstance(location, str):
            if location not in self.gazetteer:
                raise FleetError(f"unknown address {location!r}")
            return self.gazetteer[location], location
        raise FleetError(f"location must be coordinates or an address, got {location!r}")

    def _snap_to_node(self, point: GeoPoint, what: str) -> str:
        match = map_match(self.graph, point)
        if not match.on_network:
            raise FleetError(f"{what} is off-network "
                             f"(nearest edge {match.edge_id} at {match.lateral_m:.0f} m)")
        edge = self.graph.edge(match.edge_id)
        from_pos = self.graph.node(edge.from_node).position
        to_pos = self.graph.node(edge.to_node).position
        if haversine_m(point, from_pos) <= haversine_m(point, to_pos):
            return edge.from_node
        return edge.to_node

    def create_trip(self, vehicle_id: str, stops: list[dict], depart, now: float = 0.0) -> Trip:
        """Plan a trip: resolve and snap stops, order them by live travel time
        (nearest-neighbor then 2-opt), and chain shortest paths through them."""
        with self._lock:
            vehicle = self._vehicle(vehicle_id)
            if vehicle.assigned_driver is None:
                raise FleetError(f"vehicle {vehicle_id} has no assigned driver")
            if not stops:
                raise FleetError("a trip needs at least one stop")

            depart_point, _ = self.resolve_location(depart)
            depart_node = self._snap_to_node(depart_point, "departure point")

            task_stops: list[TaskStop] = []
            for i, spec in enumerate(stops, start=1):
                point, address = self.resolve_location(spec["location"])
                kind = TaskKind(spec.get("task_kind", TaskKind.Delivery))
                stop_id = f"stop-{i}"
                node = self._snap_to_node(point, f"stop {stop_id}")
                task_stops.append(TaskStop(stop_id, point, kind, StopStatus.Pending,
                                           address, node))

            speeds = self.graph.speed_snapshot()
            order = order_stops(self.graph, depart_node,
                                [s.node_id for s in task_stops], speeds)
            ordered = [task_stops[i] for i in order]

            legs: list[tuple[str, ...]] = []
            prev = depart_node
            for stop in ordered:
                try:
                    leg = shortest_path(self.graph, prev, stop.node_id, speeds)
                except NoPathError as exc:
                    raise FleetError(f"no path to stop {stop.stop_id}: {exc}") from exc
                legs.append(leg.edge_ids)
                prev = stop.node_id

            all_edges = [eid for leg in legs for eid in leg]
            route = build_route(self.graph, all_edges, speeds)

            self._counters["trip"] += 1
            trip_id = f"trip-{self._counters['trip']:04d}"
            trip = Trip(trip_id, vehicle_id, vehicle.assigned_driver, ordered, route,
                        legs, depart_node)
            self._assert_route_coverage(trip)
            self.trips[trip_id] = trip
            self._persist_trip(trip, now)
            return trip

    def start_trip(self, trip_id: str, now: float) -> Trip:
        with self._lock:
            trip = self.trip(trip_id)
            if trip.state is not TripState.Planned:
                raise FleetError(f"trip {trip_id} is {trip.state.value}, not Planned")
            active = self._active_trip_by_vehicle.get(trip.vehicle_id)
            if active is not None:
                raise FleetError(f"vehicle {trip.vehicle_id} already runs trip {active}")
            trip.state = TripState.Active
            trip.started_at = now
            self._active_trip_by_vehicle[trip.vehicle_id] = trip_id
            self._persist_trip(trip, now)
            return trip

    def _assert_route_coverage(self, trip: Trip) -> None:
        """Route must chain and pass every pending stop's node in stop order."""
        waypoint = None
        if trip.route.edge_ids:
            waypoint = self.graph.edge(trip.route.edge_ids[0]).from_node
        else:
            waypoint = trip.depart_node
        leg_iter = iter(trip.legs)
        for stop, leg in zip(trip.stops, leg_iter):
            for eid in leg:
                edge = self.graph.edge(eid)
                if edge.from_node != waypoint:
                    raise FleetError(f"trip {trip.trip_id}: route breaks before {eid}")
                waypoint = edge.to_node
            if stop.status is not StopStatus.Done and waypoint != stop.node_id:
                raise FleetError(f"trip {trip.trip_id}: route misses stop {stop.stop_id}")

    # ---- live tracking (UC: visualization, ETA) ----

    def ingest_cam(self, msg, forward: bool = True) -> None:
        with self._lock:
            vehicle = self._vehicle(msg.vehicle_id)
            if vehicle.last_position_at is not None and msg.timestamp <= vehicle.last_position_at:
                trip_id = self._active_trip_by_vehicle.get(msg.vehicle_id)
                if trip_id:
                    self.trips[trip_id].dropped_cams += 1
                return
            vehicle.last_position = msg.position
            vehicle.last_position_at = msg.timestamp

            trip_id = self._active_trip_by_vehicle.get(msg.vehicle_id)
            if trip_id is not None:
                trip = self.trips[trip_id]
                trip.trajectory.append((msg.timestamp, msg.position, msg.speed_ms))
                self._persist("trajectory", trip_id,
                              {"t": msg.timestamp, "lat": msg.position.lat,
                               "lon": msg.position.lon, "speed_ms": msg.speed_ms},
                              msg.timestamp, op="append")
                self._advance_progress(trip, msg.position)
                self._check_arrival(trip, msg.position, msg.timestamp)
        if self.hub is not None:
            self.hub.position_update(msg.vehicle_id, msg.trip_id, msg.position.lat,
                                     msg.position.lon, msg.speed_ms, msg.heading_deg,
                                     msg.timestamp)
        if forward and self.geomessenger is not None:
            self.geomessenger.ingest_cam(msg)

    def _advance_progress(self, trip: Trip, position: GeoPoint) -> None:
        """Project the position onto the remaining route edges; progress never
        moves backwards."""
        from ..geo import project_onto_segment

        edge_ids = trip.route.edge_ids
        best = None
        for i in range(trip.progress_index, len(edge_ids)):
            edge = self.graph.edge(edge_ids[i])
            a = self.graph.node(edge.from_node).position
            b = self.graph.node(edge.to_node).position
            t, lateral = project_onto_segment(position, a, b)
            key = (round(lateral, 6), i)
            if best is None or key < best[0]:
                best = (key, i, t * edge.length_m)
        if best is not None and best[0][0] <= 100.0:
            _, idx, offset = best
            if idx > trip.progress_index or (idx == trip.progress_index
                                             and offset >= trip.progress_offset_m):
                trip.progress_index = idx
                trip.progress_offset_m = offset

    def _check_arrival(self, trip: Trip, position: GeoPoint, now: float) -> None:
        for stop in trip.stops:
            if stop.status is StopStatus.Done:
                continue
            if haversine_m(position, stop.location) <= self.config.arrival_radius_m:
                if stop.status is StopStatus.Pending:
                    stop.status = StopStatus.Arrived
                    if self.auto_complete_stops:
                        stop.status = StopStatus.Done
                    self._persist_trip(trip, now)
            break  # only the first not-Done stop can be arrived at, order is fixed

    def complete_stop(self, trip_id: str, stop_id: str, now: float) -> None:
        with self._lock:
            trip = self.trip(trip_id)
            stop = trip.stop(stop_id)
            stop.status = StopStatus.Done
            self._persist_trip(trip, now)

    # ---- ETA (UC: estimated time of arrival) ----

    def _leg_boundaries(self, trip: Trip) -> list[int]:
        bounds = []
        total = 0
        for leg in trip.legs:
            total += len(leg)
            bounds.append(total)
        return bounds

    def _remaining_to_boundaries(self, trip: Trip, speeds: dict[str, float]) -> list[float]:
        edge_ids = trip.route.edge_ids
        times = [self.graph.edge(eid).length_m / speeds[eid] for eid in edge_ids]
        idx = trip.progress_index
        partial = 0.0
        if edge_ids:
            cur = self.graph.edge(edge_ids[idx])
            partial = max(0.0, (cur.length_m - trip.progress_offset_m) / speeds[cur.id])
        out = []
        for b in self._leg_boundaries(trip):
            if b <= idx:
                out.append(0.0)
            else:
                out.append(partial + sum(times[idx + 1:b]))
        return out

    def eta(self, trip_id: str, now: float) -> list[tuple[str, float]]:
        """ETA per pending stop from the map-matched current position, with the
        remaining part of the current edge counted proportionally."""
        with self._lock:
            trip = self.trip(trip_id)
            if trip.state not in (TripState.Planned, TripState.Active):
                raise FleetError(f"trip {trip_id} is {trip.state.value}")
            speeds = self.graph.speed_snapshot()
            remaining = self._remaining_to_boundaries(trip, speeds)
            return [(stop.stop_id, now + remaining[i])
                    for i, stop in enumerate(trip.stops)
                    if stop.status is not StopStatus.Done]

    # ---- dynamic rerouting (UC: rerouting, driver initiative) ----

    def _candidate_from_position(self, trip: Trip, speeds: dict[str, float]):
        """(new_legs, new_route, new_total_s) keeping stop order, starting with
        the edge the vehicle is on."""
        edge_ids = trip.route.edge_ids
        if not edge_ids:
            raise FleetError(f"trip {trip.trip_id} has an empty route")
        cur = self.graph.edge(edge_ids[trip.progress_index])
        partial = max(0.0, (cur.length_m - trip.progress_offset_m) / speeds[cur.id])
        pending = [s for s in trip.stops if s.status is not StopStatus.Done]
        legs: list[tuple[str, ...]] = []
        prev = cur.to_node
        total = partial
        for stop in pending:
            leg = shortest_path(self.graph, prev, stop.node_id, speeds)
            legs.append(leg.edge_ids)
            total += leg.total_time_s
            prev = stop.node_id
        new_edges = (cur.id,) + tuple(eid for leg in legs for eid in leg)
        new_route = build_route(self.graph, new_edges, speeds)
        # align legs with the full stop list: done stops keep empty legs
        full_legs: list[tuple[str, ...]] = []
        pending_iter = iter(legs)
        first_pending = True
        for stop in trip.stops:
            if stop.status is StopStatus.Done:
                full_legs.append(())
            else:
                leg = next(pending_iter)
                if first_pending:
                    leg = (cur.id,) + leg
                    first_pending = False
                full_legs.append(leg)
        return full_legs, new_route, total

    def _remaining_current_s(self, trip: Trip, speeds: dict[str, float]) -> float:
        remaining = self._remaining_to_boundaries(trip, speeds)
        return remaining[-1] if remaining else 0.0

    def maybe_reroute(self, trip_id: str, now: float) -> Optional[RerouteProposal]:
        """Propose a better route when it saves >= 60 s and >= 10% of the
        remaining time; None means the current route stands. While a pending
        proposal for the trip awaits a decision, no new one is raised."""
        with self._lock:
            trip = self.trip(trip_id)
            if trip.state is not TripState.Active:
                raise FleetError(f"trip {trip_id} is {trip.state.value}, not Active")
            if not trip.pending_stops():
                return None
            for existing in self.proposals.values():
                if existing.trip_id == trip_id and now <= existing.expires_at:
                    return existing
            speeds = self.graph.speed_snapshot()
            old_remaining = self._remaining_current_s(trip, speeds)
            try:
                legs, route, total = self._candidate_from_position(trip, speeds)
            except NoPathError:
                return None
            saving = old_remaining - total
            if saving < self.config.reroute_min_saving_s:
                return None
            if saving < self.config.reroute_min_saving_frac * old_remaining:
                return None
            self._counters["proposal"] += 1
            proposal = RerouteProposal(
                proposal_id=f"prop-{self._counters['proposal']:04d}",
                trip_id=trip_id,
                created_at=now,
                expires_at=now + self.config.proposal_ttl_s,
                new_route=route,
                new_legs=tuple(legs),
                old_remaining_s=old_remaining,
                new_total_s=total,
            )
            self.proposals[proposal.proposal_id] = proposal
            vehicle = self.vehicles[trip.vehicle_id]
            center = vehicle.last_position or self.graph.node(trip.depart_node).position
        if self.broker is not None:
            advisory = IvimMessage(
                self._ids.next(), IvimKind.RerouteAdvisory,
                RelevanceZone(center, 1000.0),
                {"edge_ids": list(route.edge_ids)}, now, now + self.config.proposal_ttl_s)
            self.broker.publish(advisory, now=now)
        if self.hub is not None:
            self.hub.proposal_created(proposal.to_doc(), now)
        if self.config.auto_apply:
            self.apply_proposal(proposal.proposal_id, now)
        return proposal

    def check_reroutes(self, now: float) -> list[RerouteProposal]:
        """Cadenced sweep over active trips (the reroute_check_s driver)."""
        with self._lock:
            if (self._last_reroute_check is not None
                    and now - self._last_reroute_check < self.config.reroute_check_s):
                return []
            self._last_reroute_check = now
            active = [t.trip_id for t in self.trips.values() if t.state is TripState.Active]
        out = []
        for trip_id in active:
            proposal = self.maybe_reroute(trip_id, now)
            if proposal is not None:
                out.append(proposal)
        return out

    def apply_proposal(self, proposal_id: str, now: float) -> Trip:
        """Re-validate against the live position and swap the route in."""
        with self._lock:
            proposal = self.proposals.get(proposal_id)
            if proposal is None:
                raise UnknownEntityError("proposal", proposal_id)
            if now > proposal.expires_at:
                del self.proposals[proposal_id]
                if self.hub is not None:
                    self.hub.proposal_resolved(proposal_id, "expired", now)
                raise FleetError(f"proposal {proposal_id} expired")
            trip = self.trip(proposal.trip_id)
            speeds = self.graph.speed_snapshot()
            old_remaining = self._remaining_current_s(trip, speeds)
            legs, route, total = self._candidate_from_position(trip, speeds)
            if total >= old_remaining:
                del self.proposals[proposal_id]
                if self.hub is not None:
                    self.hub.proposal_resolved(proposal_id, "stale", now)
                raise FleetError(f"proposal {proposal_id} no longer improves the trip")
            trip.route = route
            trip.legs = list(legs)
            trip.progress_index = 0
            trip.reroute_count += 1
            self._assert_route_coverage(trip)
            del self.proposals[proposal_id]
            self._persist_trip(trip, now)
        if self.hub is not None:
            self.hub.proposal_resolved(proposal_id, "applied", now)
        return trip

    def decline_proposal(self, proposal_id: str, now: float) -> None:
        with self._lock:
            if proposal_id not in self.proposals:
                raise UnknownEntityError("proposal", proposal_id)
            del self.proposals[proposal_id]
        if self.hub is not None:
            self.hub.proposal_resolved(proposal_id, "declined", now)

    def pending_proposals(self, now: float) -> list[RerouteProposal]:
        with self._lock:
            expired = [p for p in self.proposals.values() if now > p.expires_at]
            for p in expired:
                del self.proposals[p.proposal_id]
            return sorted(self.proposals.values(), key=lambda p: p.proposal_id)

    def driver_reroute(self, trip_id: str, now: float,
                       requested_route: list[str] | None = None,
                       requested_next_stop: str | None = None) -> Trip:
        """Driver-initiated change: either a concrete route (must cover all
        pending stops in order) or a new next stop (reorders pending stops)."""
        with self._lock:
            trip = self.trip(trip_id)
            if trip.state is not TripState.Active:
                raise FleetError(f"trip {trip_id} is {trip.state.value}, not Active")
            if (requested_route is None) == (requested_next_stop is None):
                raise FleetError("pass exactly one of requested_route / requested_next_stop")

            speeds = self.graph.speed_snapshot()
            if requested_next_stop is not None:
                stop = trip.stop(requested_next_stop)
                if stop.status is StopStatus.Done:
                    raise FleetError(f"stop {requested_next_stop} is already done")
                pending = [s for s in trip.stops if s.status is not StopStatus.Done]
                reordered = [stop] + [s for s in pending if s.stop_id != stop.stop_id]
                done = [s for s in trip.stops if s.status is StopStatus.Done]
                trip.stops = done + reordered
                legs, route, _ = self._candidate_from_position(trip, speeds)
            else:
                legs, route = self._split_requested_route(trip, requested_route, speeds)
            trip.route = route
            trip.legs = list(legs)
            trip.progress_index = 0
            trip.progress_offset_m = min(trip.progress_offset_m,
                                         self.graph.edge(route.edge_ids[0]).length_m) \
                if route.edge_ids else 0.0
            trip.reroute_count += 1
            self._assert_route_coverage(trip)
            self._persist("reroute", trip_id,
                          {"source": "Driver", "edge_ids": list(route.edge_ids), "t": now},
                          now, op="append")
            self._persist_trip(trip, now)
            return trip

    def _split_requested_route(self, trip: Trip, edge_ids: list[str],
                               speeds: dict[str, float]):
        """Validate a driver-supplied edge chain and split it into legs at the
        pending stops' nodes (in order)."""
        if not edge_ids:
            raise FleetError("requested route is empty")
        cur_edge_id = trip.route.edge_ids[trip.progress_index] if trip.route.edge_ids else None
        if cur_edge_id is not None and edge_ids[0] != cur_edge_id:
            raise FleetError(f"requested route must start at the current edge {cur_edge_id}")
        route = build_route(self.graph, edge_ids, speeds)

        pending = [s for s in trip.stops if s.status is not StopStatus.Done]
        legs: list[tuple[str, ...]] = [() for _ in trip.stops]
        pending_pos = 0
        current_leg: list[str] = []
        waypoint = self.graph.edge(edge_ids[0]).from_node
        for eid in edge_ids:
            edge = self.graph.edge(eid)
            current_leg.append(eid)
            waypoint = edge.to_node
            while (pending_pos < len(pending)
                   and waypoint == pending[pending_pos].node_id):
                idx = trip.stops.index(pending[pending_pos])
                legs[idx] = tuple(current_leg)
                current_leg = []
                pending_pos += 1
        if pending_pos < len(pending):
            missing = pending[pending_pos].stop_id
            raise FleetError(f"requested route misses pending stop {missing}")
        if current_leg:
            raise FleetError("requested route continues past the final stop")
        return legs, route

    # ---- completion and statistics (UC: statistics storage) ----

    def abort_trip(self, trip_id: str, now: float) -> Trip:
        with self._lock:
            trip = self.trip(trip_id)
            if trip.state in (TripState.Completed, TripState.Aborted):
                raise FleetError(f"trip {trip_id} is already {trip.state.value}")
            trip.state = TripState.Aborted
            trip.completed_at = now
            self._active_trip_by_vehicle.pop(trip.vehicle_id, None)
            self._persist_trip(trip, now)
            return trip

    def complete_trip(self, trip_id: str, now: float) -> TripStatistics:
        with self._lock:
            trip = self.trip(trip_id)
            if trip_id in self.statistics:
                raise FleetError(f"trip {trip_id} already completed")
            if trip.state is not TripState.Aborted:
                not_done = [s.stop_id for s in trip.stops if s.status is not StopStatus.Done]
                if not_done:
                    raise FleetError(f"trip {trip_id} has pending stops: {', '.join(not_done)}")
                trip.state = TripState.Completed
                trip.completed_at = now
                self._active_trip_by_vehicle.pop(trip.vehicle_id, None)

            points = trip.trajectory
            distance = sum(haversine_m(points[i][1], points[i + 1][1])
                           for i in range(len(points) - 1))
            duration = points[-1][0] - points[0][0] if len(points) >= 2 else 0.0
            speeds = [p[2] for p in points]
            max_speed = max(speeds) if speeds else 0.0
            min_speed = min(speeds) if speeds else 0.0

            prior = [self.trips[tid] for tid in self.statistics]
            per_vehicle = [t for t in prior if t.vehicle_id == trip.vehicle_id]
            per_driver = [t for t in prior if t.driver_id == trip.driver_id]

            def hours(prior_trips):
                total = duration + sum(self.statistics[t.trip_id].duration_s
                                       for t in prior_trips)
                return total / 3600.0

            stats = TripStatistics(
                trip_id=trip_id,
                distance_m=round2(distance),
                duration_s=round2(duration),
                max_speed_ms=round2(max_speed),
                min_speed_ms=round2(min_speed),
                trips_per_vehicle=len(per_vehicle) + 1,
                trips_per_driver=len(per_driver) + 1,
                vehicle_working_hours=round2(hours(per_vehicle)),
                driver_working_hours=round2(hours(per_driver)),
            )
            self.statistics[trip_id] = stats
            self._persist("statistics", trip_id, stats.to_doc(), now)
            self._persist_trip(trip, now)
            return stats

    # ---- TMC exchange (UC: data exchange with traffic management) ----

    def tmc_exchange(self, window_from: float, window_to: float) -> dict:
        """Per-edge mean speeds and distinct-vehicle counts observed in the window."""
        if window_to < window_from:
            raise FleetError(f"invalid window: {window_from} .. {window_to}")
        sums: dict[str, float] = {}
        counts: dict[str, int] = {}
        vehicles: dict[str, set] = {}
        with self._lock:
            trips = list(self.trips.values())
        for trip in trips:
            for ts, pos, speed in trip.trajectory:
                if not window_from <= ts <= window_to:
                    continue
                match = map_match(self.graph, pos)
                if not match.on_network:
                    continue
                sums[match.edge_id] = sums.get(match.edge_id, 0.0) + speed
                counts[match.edge_id] = counts.get(match.edge_id, 0) + 1
                vehicles.setdefault(match.edge_id, set()).add(trip.vehicle_id)
        return {
            "window": {"from": window_from, "to": window_to},
            "edges": [
                {"edge_id": eid,
                 "mean_speed_ms": round2(sums[eid] / counts[eid]),
                 "vehicle_count": len(vehicles[eid])}
                for eid in sorted(sums)
            ],
        }

    def tmc_ingest(self, events: list, now: float) -> dict:
        """Forward TMC events into the advisory pipeline; each event is accepted
        or rejected on its own."""
        from ..geomessenger import EventError, EventSource, TrafficEvent

        accepted: list[str] = []
        rejected: list[dict] = []
        for i, doc in enumerate(events):
            try:
                zone_doc = doc["zone"]
                event = TrafficEvent(
                    event_id=doc.get("event_id", ""),
                    cause=doc["cause"],
                    zone=RelevanceZone(
                        GeoPoint(float(zone_doc["center"]["lat"]),
                                 float(zone_doc["center"]["lon"])),
                        float(zone_doc["radius_m"])),
                    valid_from=float(doc["valid_from"]),
                    valid_to=float(doc["valid_to"]),
                    source=EventSource.TMC,
                    free_text=doc.get("free_text"),
                )
                accepted.append(self.geomessenger.register_event(event, now))
            except (KeyError, TypeError, ValueError, EventError) as exc:
                rejected.append({"index": i, "error": str(exc)})
        return {"accepted": accepted, "rejected": rejected}
