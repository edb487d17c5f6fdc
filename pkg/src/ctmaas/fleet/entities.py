"""Fleet domain objects: drivers, vehicles, stops, trips, statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from ..geo import GeoPoint
from ..network import Route


class FleetError(ValueError):
    pass


class UnknownEntityError(KeyError):
    def __init__(self, kind: str, entity_id: str):
        super().__init__(f"{kind} {entity_id!r} not found")
        self.kind = kind
        self.entity_id = entity_id


class TaskKind(str, Enum):
    Pickup = "Pickup"
    Delivery = "Delivery"
    Maintenance = "Maintenance"


class StopStatus(str, Enum):
    Pending = "Pending"
    Arrived = "Arrived"
    Done = "Done"


class TripState(str, Enum):
    Planned = "Planned"
    Active = "Active"
    Completed = "Completed"
    Aborted = "Aborted"


@dataclass
class Driver:
    driver_id: str
    name: str
    phone: str


@dataclass
class Vehicle:
    vehicle_id: str
    plate: str
    color: str
    assigned_driver: Optional[str] = None
    last_position: Optional[GeoPoint] = None
    last_position_at: Optional[float] = None


@dataclass
class TaskStop:
    stop_id: str
    location: GeoPoint          # resolved position (gazetteer or raw coordinates)
    task_kind: TaskKind
    status: StopStatus = StopStatus.Pending
    address: Optional[str] = None
    node_id: str = ""           # graph node the routing snaps this stop to


@dataclass
class Trip:
    trip_id: str
    vehicle_id: str
    driver_id: str
    stops: list[TaskStop]
    route: Route
    legs: list[tuple[str, ...]]  # per-stop edge chains; concatenation == route
    depart_node: str
    state: TripState = TripState.Planned
    trajectory: list[tuple[float, GeoPoint, float]] = field(default_factory=list)
    reroute_count: int = 0
    started_at: Optional[float] = None
    completed_at: Optional[float] = None
    # progress along route: index of the edge the vehicle was last matched to
    progress_index: int = 0
    progress_offset_m: float = 0.0
    dropped_cams: int = 0

    def pending_stops(self) -> list[TaskStop]:
        return [s for s in self.stops if s.status is not StopStatus.Done]

    def stop(self, stop_id: str) -> TaskStop:
        for s in self.stops:
            if s.stop_id == stop_id:
                return s
        raise UnknownEntityError("stop", stop_id)


@dataclass(frozen=True)
class TripStatistics:
    """Per-trip figures plus the fleet aggregates at completion time.

    All values carry canonical 2-decimal rounding so recomputation from the
    persisted trajectory reproduces them bit for bit.
    """

    trip_id: str
    distance_m: float
    duration_s: float
    max_speed_ms: float
    min_speed_ms: float
    trips_per_vehicle: int
    trips_per_driver: int
    vehicle_working_hours: float
    driver_working_hours: float

    def to_doc(self) -> dict:
        return {
            "trip_id": self.trip_id,
            "distance_m": self.distance_m,
            "duration_s": self.duration_s,
            "max_speed_ms": self.max_speed_ms,
            "min_speed_ms": self.min_speed_ms,
            "trips_per_vehicle": self.trips_per_vehicle,
            "trips_per_driver": self.trips_per_driver,
            "vehicle_working_hours": self.vehicle_working_hours,
            "driver_working_hours": self.driver_working_hours,
        }
