"""The four message families the platform exchanges, plus their validation.

Values are kept at full precision in process; the codec quantizes on its way
to the wire (degrees to 6 decimals, speeds and meters to 2, timestamps to 3).
Instances are frozen; validation is explicit (``validate``) and collects
every violated invariant rather than stopping at the first.
"""

from __future__ import annotations

import math
import uuid
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .geo import GeoPoint, haversine_m

MAX_ZONE_RADIUS_M = 50_000.0


def _round_or_none(value, places):
    if value is None:
        return None
    v = round(float(value), places)
    return 0.0 if v == 0 else v  # normalize -0.0 for canonical bytes


def round_degrees(value):
    return _round_or_none(value, 6)


def round_heading(value):
    v = _round_or_none(value, 6)
    return 0.0 if v is not None and v >= 360.0 else v  # 359.9999997 wraps, stays valid


def round_speed(value):
    return _round_or_none(value, 2)


def round_meters(value):
    return _round_or_none(value, 2)


def round_seconds(value):
    return _round_or_none(value, 3)


class MessageValidationError(ValueError):
    """One or more message invariants violated; .violations lists them all."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class RoadWorksFamily(str, Enum):
    RWW = "RWW"
    RHW = "RHW"


class HazardCause(Enum):
    """Closed catalogue of hazard notification causes, each tagged with its
    service family (road works vs road hazard)."""

    LaneClosure = ("LaneClosure", RoadWorksFamily.RWW)
    MobileRoadWorks = ("MobileRoadWorks", RoadWorksFamily.RWW)
    PlannedRoadWorks = ("PlannedRoadWorks", RoadWorksFamily.RWW)
    LongTermRoadWorks = ("LongTermRoadWorks", RoadWorksFamily.RWW)
    UnplannedRoadWorks = ("UnplannedRoadWorks", RoadWorksFamily.RWW)
    WeatherConditions = ("WeatherConditions", RoadWorksFamily.RHW)
    ObstacleOnRoad = ("ObstacleOnRoad", RoadWorksFamily.RHW)
    StationaryVehicle = ("StationaryVehicle", RoadWorksFamily.RHW)
    VmsFreeText = ("VmsFreeText", RoadWorksFamily.RHW)

    def __init__(self, wire_name: str, family: RoadWorksFamily):
        self.wire_name = wire_name
        self.family = family

    @classmethod
    def from_wire(cls, name: str) -> "HazardCause":
        for cause in cls:
            if cause.wire_name == name:
                return cause
        raise ValueError(f"unknown hazard cause {name!r}")


class IvimKind(str, Enum):
    TrafficCongestion = "TrafficCongestion"
    VmsFreeText = "VmsFreeText"
    SpeedAdvisory = "SpeedAdvisory"
    RerouteAdvisory = "RerouteAdvisory"
    StaticSign = "StaticSign"


class PriorityDirection(str, Enum):
    Request = "Request"
    Response = "Response"


class PriorityVerdict(str, Enum):
    Granted = "Granted"
    Denied = "Denied"


@dataclass(frozen=True)
class RelevanceZone:
    """Circular area a message applies to."""

    center: GeoPoint
    radius_m: float

    def violations(self, prefix: str = "zone") -> list[str]:
        out = []
        if not (0 < self.radius_m <= MAX_ZONE_RADIUS_M):
            out.append(f"{prefix}.radius must be in (0, {MAX_ZONE_RADIUS_M:.0f}], got {self.radius_m}")
        return out

    def contains(self, p: GeoPoint) -> bool:
        return is_relevant(self, p)


def is_relevant(zone: RelevanceZone, p: GeoPoint) -> bool:
    """Closed-ball test: a point exactly on the radius is still relevant."""
    return haversine_m(zone.center, p) <= zone.radius_m


def _check_uuid(msg_id, out: list[str]) -> None:
    if not isinstance(msg_id, str):
        out.append(f"msg_id must be a UUID string, got {type(msg_id).__name__}")
        return
    try:
        uuid.UUID(msg_id)
    except ValueError:
        out.append(f"msg_id {msg_id!r} is not a valid UUID string")


def _check_validity(valid_from, valid_to, out: list[str]) -> None:
    if not (valid_from < valid_to):
        out.append(f"valid_from ({valid_from}) must be before valid_to ({valid_to})")


@dataclass(frozen=True)
class CamMessage:
    """Periodic awareness broadcast: who is where, how fast, pointing which way."""

    station_id: str
    vehicle_id: str
    trip_id: str
    driver_id: str
    timestamp: float
    position: GeoPoint
    speed_ms: float
    heading_deg: float

    def violations(self) -> list[str]:
        out = []
        if not math.isfinite(self.speed_ms) or self.speed_ms < 0:
            out.append(f"speed must be >= 0, got {self.speed_ms}")
        if not math.isfinite(self.heading_deg) or not 0 <= self.heading_deg < 360:
            out.append(f"heading must be in [0, 360), got {self.heading_deg}")
        if self.timestamp is None or self.timestamp <= 0:
            out.append(f"timestamp must be > 0, got {self.timestamp}")
        return out


@dataclass(frozen=True)
class HazardMessage:
    """Event-triggered hazard notification with a relevance zone and validity."""

    msg_id: str
    cause: HazardCause
    zone: RelevanceZone
    valid_from: float
    valid_to: float
    originator: str
    free_text: Optional[str] = None

    def violations(self) -> list[str]:
        out = []
        _check_uuid(self.msg_id, out)
        if not isinstance(self.cause, HazardCause):
            out.append(f"cause must be a HazardCause, got {self.cause!r}")
        out.extend(self.zone.violations())
        _check_validity(self.valid_from, self.valid_to, out)
        if self.cause is HazardCause.VmsFreeText and not self.free_text:
            out.append("free_text required for cause VmsFreeText")
        return out


# payload shape each advisory kind must carry
IVIM_PAYLOAD_FIELDS = {
    IvimKind.TrafficCongestion: (),
    IvimKind.VmsFreeText: ("text",),
    IvimKind.SpeedAdvisory: ("advised_speed_ms",),
    IvimKind.RerouteAdvisory: ("edge_ids",),
    IvimKind.StaticSign: ("sign_code",),
}


@dataclass(frozen=True)
class IvimMessage:
    """Infrastructure-to-vehicle advisory (signage, congestion, speed, reroute)."""

    msg_id: str
    kind: IvimKind
    zone: RelevanceZone
    payload: dict
    valid_from: float
    valid_to: float

    def __post_init__(self):
        if isinstance(self.payload, dict) and isinstance(self.payload.get("edge_ids"), tuple):
            payload = dict(self.payload)
            payload["edge_ids"] = list(payload["edge_ids"])
            object.__setattr__(self, "payload", payload)

    def violations(self) -> list[str]:
        out = []
        _check_uuid(self.msg_id, out)
        if not isinstance(self.kind, IvimKind):
            out.append(f"kind must be an IvimKind, got {self.kind!r}")
            return out
        out.extend(self.zone.violations())
        _check_validity(self.valid_from, self.valid_to, out)
        expected = IVIM_PAYLOAD_FIELDS[self.kind]
        if not isinstance(self.payload, dict):
            out.append(f"payload must be an object, got {type(self.payload).__name__}")
            return out
        for key in expected:
            if key not in self.payload:
                out.append(f"payload for kind {self.kind.value} requires {key!r}")
        extra = set(self.payload) - set(expected)
        if extra:
            out.append(f"payload for kind {self.kind.value} has unexpected fields {sorted(extra)}")
        if self.kind is IvimKind.SpeedAdvisory and "advised_speed_ms" in self.payload:
            v = self.payload["advised_speed_ms"]
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                out.append(f"advised_speed_ms must be a positive number, got {v!r}")
        if self.kind is IvimKind.RerouteAdvisory and "edge_ids" in self.payload:
            v = self.payload["edge_ids"]
            if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
                out.append("edge_ids must be a list of edge id strings")
        if self.kind is IvimKind.VmsFreeText and not self.payload.get("text"):
            out.append("text required for kind VmsFreeText")
        if self.kind is IvimKind.StaticSign and "sign_code" in self.payload:
            if not isinstance(self.payload["sign_code"], str) or not self.payload["sign_code"]:
                out.append("sign_code must be a non-empty string")
        return out


@dataclass(frozen=True)
class PriorityMessage:
    """Signalized-intersection priority request or response."""

    msg_id: str
    direction: PriorityDirection
    vehicle_id: str
    intersection_id: str
    approach_id: str
    predicted_arrival: float
    verdict: Optional[PriorityVerdict] = None

    def violations(self) -> list[str]:
        out = []
        _check_uuid(self.msg_id, out)
        if not isinstance(self.direction, PriorityDirection):
            out.append(f"direction must be Request or Response, got {self.direction!r}")
            return out
        if self.direction is PriorityDirection.Response and self.verdict is None:
            out.append("verdict required on a Response")
        if self.direction is PriorityDirection.Request and self.verdict is not None:
            out.append("verdict must be absent on a Request")
        return out


Message = Union[CamMessage, HazardMessage, IvimMessage, PriorityMessage]


def validate(msg: Message) -> None:
    """Raise MessageValidationError listing every violated invariant."""
    violations = msg.violations()
    if violations:
        raise MessageValidationError(violations)


def message_zone(msg: Message) -> Optional[RelevanceZone]:
    return getattr(msg, "zone", None)


def message_validity(msg: Message) -> Optional[tuple[float, float]]:
    if hasattr(msg, "valid_from"):
        return (msg.valid_from, msg.valid_to)
    return None


class MessageIdFactory:
    """UUID strings for message ids; seeded instances are fully deterministic."""

    _NAMESPACE = uuid.UUID("6ba7b810-9dad-11d1-80b4-00c04fd430c8")  # RFC 4122 DNS ns

    def __init__(self, seed: str | None = None):
        self._seed = seed
        self._counter = 0

    def next(self) -> str:
        if self._seed is None:
            return str(uuid.uuid4())
        self._counter += 1
        return str(uuid.uuid5(self._NAMESPACE, f"{self._seed}:{self._counter}"))
