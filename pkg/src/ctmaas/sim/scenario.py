"""Scenario files: the declarative input that drives a closed-loop run.

See scenario-schema.md in the repository root for the full schema. Paths
inside a scenario are resolved relative to the scenario file itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..geo import GeoPoint


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class SlowEdge:
    at_s: float
    edge_id: str
    factor: float


@dataclass(frozen=True)
class StopVehicle:
    at_s: float
    vehicle_index: int
    duration_s: float


@dataclass(frozen=True)
class InjectEvent:
    at_s: float
    event: dict


Disturbance = SlowEdge | StopVehicle | InjectEvent


@dataclass(frozen=True)
class VehicleSpec:
    plate: str
    color: str
    driver_name: str
    driver_phone: str
    obeys_speed_advisory: bool = True
    obeys_reroute: bool = True
    obeys_glosa: bool = False
    requests_priority: bool = False
    start_delay_s: float = 0.0
    start_edge_offset_m: float = 0.0


@dataclass(frozen=True)
class TripSpec:
    vehicle_index: int
    depart: object  # GeoPoint or address string
    stops: tuple[dict, ...]


@dataclass
class Scenario:
    name: str
    graph_path: Path
    duration_s: float
    seed: int
    signals_path: Optional[Path] = None
    gazetteer_path: Optional[Path] = None
    start_time: float = 0.0
    dt_s: float = 0.5
    cam_interval_s: float = 1.0
    vehicles: list[VehicleSpec] = field(default_factory=list)
    trips: list[TripSpec] = field(default_factory=list)
    disturbances: list[Disturbance] = field(default_factory=list)
    config_overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be > 0")
        if self.dt_s <= 0:
            raise ScenarioError("dt_s must be > 0")
        if not self.vehicles:
            raise ScenarioError("scenario needs at least one vehicle")
        for t in self.trips:
            if not 0 <= t.vehicle_index < len(self.vehicles):
                raise ScenarioError(f"trip references vehicle {t.vehicle_index}")
            if not t.stops:
                raise ScenarioError("every trip needs at least one stop")
        for d in self.disturbances:
            if not 0 <= d.at_s <= self.duration_s:
                raise ScenarioError(f"disturbance at {d.at_s}s outside run duration")
            if isinstance(d, StopVehicle) and not 0 <= d.vehicle_index < len(self.vehicles):
                raise ScenarioError(f"disturbance references vehicle {d.vehicle_index}")
            if isinstance(d, SlowEdge) and not 0 < d.factor <= 1:
                raise ScenarioError(f"SlowEdge factor must be in (0, 1], got {d.factor}")


def _parse_location(doc):
    if isinstance(doc, str):
        return doc
    return GeoPoint(float(doc["lat"]), float(doc["lon"]))


def load_scenario(path: str | Path, seed: int | None = None) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc

    base = path.parent

    def rel(p):
        return (base / p).resolve() if p else None

    vehicles = []
    for v in doc.get("vehicles", []):
        vehicles.append(VehicleSpec(
            plate=v["plate"],
            color=v.get("color", "white"),
            driver_name=v.get("driver_name", f"driver of {v['plate']}"),
            driver_phone=v.get("driver_phone", "n/a"),
            obeys_speed_advisory=bool(v.get("obeys_speed_advisory", True)),
            obeys_reroute=bool(v.get("obeys_reroute", True)),
            obeys_glosa=bool(v.get("obeys_glosa", False)),
            requests_priority=bool(v.get("requests_priority", False)),
            start_delay_s=float(v.get("start_delay_s", 0.0)),
            start_edge_offset_m=float(v.get("start_edge_offset_m", 0.0)),
        ))

    trips = []
    for t in doc.get("trips", []):
        trips.append(TripSpec(
            vehicle_index=int(t["vehicle_index"]),
            depart=_parse_location(t["depart"]),
            stops=tuple({"location": _parse_location(s["location"]),
                         "task_kind": s.get("task_kind", "Delivery")} for s in t["stops"]),
        ))

    disturbances: list[Disturbance] = []
    for d in doc.get("disturbances", []):
        kind = d.get("kind")
        if kind == "SlowEdge":
            disturbances.append(SlowEdge(float(d["at_s"]), d["edge_id"], float(d["factor"])))
        elif kind == "StopVehicle":
            disturbances.append(StopVehicle(float(d["at_s"]), int(d["vehicle_index"]),
                                            float(d["duration_s"])))
        elif kind == "InjectEvent":
            disturbances.append(InjectEvent(float(d["at_s"]), d["event"]))
        else:
            raise ScenarioError(f"unknown disturbance kind {kind!r}")

    scenario = Scenario(
        name=doc.get("name", path.stem),
        graph_path=rel(doc["graph"]),
        signals_path=rel(doc.get("signals")),
        gazetteer_path=rel(doc.get("gazetteer")),
        duration_s=float(doc["duration_s"]),
        seed=int(seed if seed is not None else doc.get("seed", 0)),
        start_time=float(doc.get("start_time", 0.0)),
        dt_s=float(doc.get("dt_s", 0.5)),
        cam_interval_s=float(doc.get("cam_interval_s", 1.0)),
        vehicles=vehicles,
        trips=trips,
        disturbances=disturbances,
        config_overrides=doc.get("config", {}),
    )
    scenario.validate()
    return scenario
