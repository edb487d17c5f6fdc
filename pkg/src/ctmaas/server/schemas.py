"""Pydantic request/response bodies for the HTTP API."""

from __future__ import annotations

from typing import Optional, Union

from pydantic import BaseModel, Field


class LoginRequest(BaseModel):
    user_id: str
    credential: str


class Coordinates(BaseModel):
    lat: float
    lon: float


Location = Union[str, Coordinates]


class DriverCreate(BaseModel):
    name: str
    phone: str


class VehicleCreate(BaseModel):
    plate: str
    color: str


class AssignDriverRequest(BaseModel):
    driver_id: str


class StopSpec(BaseModel):
    location: Location
    task_kind: str = "Delivery"


class TripCreate(BaseModel):
    vehicle_id: str
    depart: Location
    stops: list[StopSpec] = Field(min_length=1)


class DriverRerouteRequest(BaseModel):
    edge_ids: Optional[list[str]] = None
    next_stop_id: Optional[str] = None


class CamIn(BaseModel):
    station_id: str
    vehicle_id: str
    trip_id: str = ""
    driver_id: str = ""
    timestamp: float
    lat: float
    lon: float
    alt: float = 0.0
    speed_ms: float
    heading_deg: float


class PriorityRequestIn(BaseModel):
    vehicle_id: str
    intersection_id: str
    approach_id: str
    predicted_arrival: float


class ZoneIn(BaseModel):
    lat: float
    lon: float
    radius_m: float


class EventIn(BaseModel):
    cause: str
    zone: ZoneIn
    valid_from: float
    valid_to: float
    free_text: Optional[str] = None
    event_id: str = ""


class SubscriptionCreate(BaseModel):
    subscriber_id: str
    geofence: ZoneIn
    type_filter: list[str] = Field(default_factory=list)


class TmcEventsIn(BaseModel):
    events: list[dict]
