"""HTTP facade over the platform: auth, role-guarded endpoints, live stream.

Error classes are exactly four: 401 unauthenticated, 403 wrong role,
404 unknown entity, 422 validation. The role matrix below is total — every
endpoint names its allowed roles (None = public) — and is exported so tests
can enumerate endpoints x roles.
"""

from __future__ import annotations

import asyncio
import json
import time
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import StreamingResponse

from ..auth import (
    AuthError,
    BadCredentialError,
    Role,
    TokenService,
    UnknownUserError,
    User,
)
from ..broker import UnknownSubscriptionError
from ..codec import encode
from ..fleet import FleetError, UnknownEntityError
from ..fleet.entities import Trip
from ..geo import GeoPoint
from ..geomessenger import EventError, EventSource, TrafficEvent
from ..messages import (
    CamMessage,
    MessageValidationError,
    PriorityDirection,
    PriorityMessage,
    RelevanceZone,
)
from ..network import UnknownEdgeError, UnknownNodeError, predict_travel_time
from ..platform import Platform
from ..signals import (
    SignalError,
    UnknownApproachError,
    UnknownIntersectionError,
)
from . import schemas

FM = Role.FleetManager
TM = Role.TrafficManager
DRV = Role.Driver

# (method, path) -> allowed roles; None means no token required
ENDPOINT_ROLES: dict[tuple[str, str], Optional[frozenset[Role]]] = {
    ("POST", "/auth/login"): None,
    ("GET", "/auth/me"): frozenset({FM, TM, DRV}),
    ("POST", "/drivers"): frozenset({FM}),
    ("GET", "/drivers"): frozenset({FM}),
    ("POST", "/vehicles"): frozenset({FM}),
    ("GET", "/vehicles"): frozenset({FM}),
    ("POST", "/vehicles/{vehicle_id}/driver"): frozenset({FM}),
    ("POST", "/trips"): frozenset({FM}),
    ("GET", "/trips"): frozenset({FM}),
    ("GET", "/trips/{trip_id}"): frozenset({FM, DRV}),
    ("GET", "/trips/{trip_id}/eta"): frozenset({FM, DRV}),
    ("POST", "/trips/{trip_id}/start"): frozenset({FM}),
    ("POST", "/trips/{trip_id}/stops/{stop_id}/complete"): frozenset({FM, DRV}),
    ("POST", "/trips/{trip_id}/complete"): frozenset({FM}),
    ("POST", "/trips/{trip_id}/abort"): frozenset({FM}),
    ("POST", "/trips/{trip_id}/reroute-check"): frozenset({FM}),
    ("POST", "/trips/{trip_id}/driver-reroute"): frozenset({DRV}),
    ("GET", "/proposals"): frozenset({FM}),
    ("POST", "/proposals/{proposal_id}/approve"): frozenset({FM}),
    ("POST", "/proposals/{proposal_id}/decline"): frozenset({FM}),
    ("GET", "/statistics"): frozenset({FM}),
    ("POST", "/cam"): frozenset({DRV}),
    ("POST", "/priority/request"): frozenset({DRV}),
    ("GET", "/events"): frozenset({TM}),
    ("POST", "/events"): frozenset({TM}),
    ("GET", "/signals"): frozenset({TM}),
    ("GET", "/network/graph"): frozenset({FM, TM}),
    ("GET", "/network/edges/{edge_id}/prediction"): frozenset({TM}),
    ("GET", "/tmc/export"): frozenset({TM}),
    ("POST", "/tmc/events"): frozenset({TM}),
    ("POST", "/broker/subscriptions"): frozenset({FM, TM, DRV}),
    ("DELETE", "/broker/subscriptions/{sub_id}"): frozenset({FM, TM, DRV}),
    ("GET", "/broker/subscriptions/{sub_id}/messages"): frozenset({FM, TM, DRV}),
    ("GET", "/stream"): frozenset({FM}),
    ("GET", "/stream/driver"): frozenset({DRV}),
}

VALIDATION_ERRORS = (FleetError, MessageValidationError, SignalError, EventError,
                     ValueError)
NOT_FOUND_ERRORS = (UnknownEntityError, UnknownSubscriptionError, UnknownEdgeError,
                    UnknownNodeError, UnknownIntersectionError, UnknownApproachError,
                    UnknownUserError, KeyError)


def _trip_doc(trip: Trip) -> dict:
    return {
        "trip_id": trip.trip_id,
        "vehicle_id": trip.vehicle_id,
        "driver_id": trip.driver_id,
        "state": trip.state.value,
        "reroute_count": trip.reroute_count,
        "edge_ids": list(trip.route.edge_ids),
        "total_length_m": trip.route.total_length_m,
        "total_time_s": trip.route.total_time_s,
        "stops": [
            {"stop_id": s.stop_id, "lat": s.location.lat, "lon": s.location.lon,
             "task_kind": s.task_kind.value, "status": s.status.value,
             "node_id": s.node_id, "address": s.address}
            for s in trip.stops
        ],
    }


def create_app(platform: Platform, tokens: TokenService | None = None,
               now_fn=time.time) -> FastAPI:
    tokens = tokens or TokenService(platform.config.auth.secret,
                                    platform.config.auth.token_ttl_s, log=platform.log)
    for u in platform.config.auth.users:
        tokens.add_user(u["user_id"], u.get("display_name", u["user_id"]), u["role"],
                        u["password"], u.get("subject"))

    app = FastAPI(title="ctmaas", version="0.1.0")
    app.state.platform = platform
    app.state.tokens = tokens
    fleet = platform.fleet

    # ---- auth plumbing ----

    def current_user(request: Request) -> User:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise HTTPException(401, "missing bearer token")
        try:
            return tokens.validate(header[7:].strip(), now_fn())
        except AuthError as exc:
            raise HTTPException(401, str(exc)) from exc

    def require(*roles: Role):
        allowed = frozenset(roles)

        def guard(user: User = Depends(current_user)) -> User:
            if user.role not in allowed:
                raise HTTPException(403, f"role {user.role.value} not allowed")
            return user

        return guard

    def own_trip_or_manager(trip: Trip, user: User) -> None:
        if user.role is Role.FleetManager:
            return
        if user.role is Role.Driver and user.subject == trip.driver_id:
            return
        raise HTTPException(403, "not your trip")

    from fastapi.responses import JSONResponse

    async def not_found_handler(request: Request, exc: Exception):
        return JSONResponse({"detail": str(exc)}, status_code=404)

    async def validation_handler(request: Request, exc: Exception):
        return JSONResponse({"detail": str(exc)}, status_code=422)

    for klass in NOT_FOUND_ERRORS:
        app.add_exception_handler(klass, not_found_handler)
    for klass in VALIDATION_ERRORS:
        app.add_exception_handler(klass, validation_handler)

    # ---- auth ----

    @app.post("/auth/login")
    def login(body: schemas.LoginRequest):
        try:
            token = tokens.login(body.user_id, body.credential, now_fn())
        except (BadCredentialError, UnknownUserError) as exc:
            raise HTTPException(401, str(exc)) from exc
        user = tokens.user(body.user_id)
        return {"token": token.token, "user_id": token.user_id, "role": user.role.value,
                "expires_at": token.expires_at}

    @app.get("/auth/me")
    def me(user: User = Depends(require(FM, TM, DRV))):
        return {"user_id": user.user_id, "display_name": user.display_name,
                "role": user.role.value, "subject": user.subject}

    # ---- fleet registry ----

    @app.post("/drivers", status_code=201)
    def create_driver(body: schemas.DriverCreate, user: User = Depends(require(FM))):
        driver_id = fleet.register_driver(body.name, body.phone, now_fn())
        return {"driver_id": driver_id}

    @app.get("/drivers")
    def list_drivers(user: User = Depends(require(FM))):
        return {"drivers": [{"driver_id": d.driver_id, "name": d.name, "phone": d.phone}
                            for d in fleet.drivers.values()]}

    @app.post("/vehicles", status_code=201)
    def create_vehicle(body: schemas.VehicleCreate, user: User = Depends(require(FM))):
        vehicle_id = fleet.register_vehicle(body.plate, body.color, now_fn())
        return {"vehicle_id": vehicle_id}

    @app.get("/vehicles")
    def list_vehicles(user: User = Depends(require(FM))):
        return {"vehicles": [
            {"vehicle_id": v.vehicle_id, "plate": v.plate, "color": v.color,
             "assigned_driver": v.assigned_driver,
             "last_position": None if v.last_position is None else
             {"lat": v.last_position.lat, "lon": v.last_position.lon,
              "timestamp": v.last_position_at}}
            for v in fleet.vehicles.values()]}

    @app.post("/vehicles/{vehicle_id}/driver")
    def assign_driver(vehicle_id: str, body: schemas.AssignDriverRequest,
                      user: User = Depends(require(FM))):
        fleet.assign_driver(vehicle_id, body.driver_id, now_fn())
        return {"vehicle_id": vehicle_id, "driver_id": body.driver_id}

    # ---- trips ----

    def _location(loc):
        if isinstance(loc, schemas.Coordinates):
            return GeoPoint(loc.lat, loc.lon)
        return loc

    @app.post("/trips", status_code=201)
    def create_trip(body: schemas.TripCreate, user: User = Depends(require(FM))):
        stops = [{"location": _location(s.location), "task_kind": s.task_kind}
                 for s in body.stops]
        trip = fleet.create_trip(body.vehicle_id, stops, _location(body.depart), now_fn())
        return _trip_doc(trip)

    @app.get("/trips")
    def list_trips(user: User = Depends(require(FM))):
        return {"trips": [_trip_doc(t) for t in fleet.trips.values()]}

    @app.get("/trips/{trip_id}")
    def get_trip(trip_id: str, user: User = Depends(require(FM, DRV))):
        trip = fleet.trip(trip_id)
        own_trip_or_manager(trip, user)
        return _trip_doc(trip)

    @app.get("/trips/{trip_id}/eta")
    def trip_eta(trip_id: str, user: User = Depends(require(FM, DRV))):
        trip = fleet.trip(trip_id)
        own_trip_or_manager(trip, user)
        now = now_fn()
        return {"trip_id": trip_id, "now": now,
                "etas": [{"stop_id": sid, "eta": eta} for sid, eta in fleet.eta(trip_id, now)]}

    @app.post("/trips/{trip_id}/start")
    def start_trip(trip_id: str, user: User = Depends(require(FM))):
        return _trip_doc(fleet.start_trip(trip_id, now_fn()))

    @app.post("/trips/{trip_id}/stops/{stop_id}/complete")
    def complete_stop(trip_id: str, stop_id: str, user: User = Depends(require(FM, DRV))):
        trip = fleet.trip(trip_id)
        own_trip_or_manager(trip, user)
        fleet.complete_stop(trip_id, stop_id, now_fn())
        return _trip_doc(fleet.trip(trip_id))

    @app.post("/trips/{trip_id}/complete")
    def complete_trip(trip_id: str, user: User = Depends(require(FM))):
        stats = fleet.complete_trip(trip_id, now_fn())
        return stats.to_doc()

    @app.post("/trips/{trip_id}/abort")
    def abort_trip(trip_id: str, user: User = Depends(require(FM))):
        return _trip_doc(fleet.abort_trip(trip_id, now_fn()))

    @app.post("/trips/{trip_id}/reroute-check")
    def reroute_check(trip_id: str, user: User = Depends(require(FM))):
        proposal = fleet.maybe_reroute(trip_id, now_fn())
        return {"proposal": None if proposal is None else proposal.to_doc()}

    @app.post("/trips/{trip_id}/driver-reroute")
    def driver_reroute(trip_id: str, body: schemas.DriverRerouteRequest,
                       user: User = Depends(require(DRV))):
        trip = fleet.trip(trip_id)
        own_trip_or_manager(trip, user)
        trip = fleet.driver_reroute(trip_id, now_fn(), requested_route=body.edge_ids,
                                    requested_next_stop=body.next_stop_id)
        return _trip_doc(trip)

    @app.get("/proposals")
    def list_proposals(user: User = Depends(require(FM))):
        return {"proposals": [p.to_doc() for p in fleet.pending_proposals(now_fn())]}

    @app.post("/proposals/{proposal_id}/approve")
    def approve_proposal(proposal_id: str, user: User = Depends(require(FM))):
        return _trip_doc(fleet.apply_proposal(proposal_id, now_fn()))

    @app.post("/proposals/{proposal_id}/decline")
    def decline_proposal(proposal_id: str, user: User = Depends(require(FM))):
        fleet.decline_proposal(proposal_id, now_fn())
        return {"proposal_id": proposal_id, "status": "declined"}

    @app.get("/statistics")
    def statistics(user: User = Depends(require(FM))):
        return {"statistics": [s.to_doc() for s in fleet.statistics.values()]}

    # ---- vehicle-side ingestion ----

    @app.post("/cam", status_code=202)
    def post_cam(body: schemas.CamIn, user: User = Depends(require(DRV))):
        msg = CamMessage(
            station_id=body.station_id, vehicle_id=body.vehicle_id, trip_id=body.trip_id,
            driver_id=body.driver_id, timestamp=body.timestamp,
            position=GeoPoint(body.lat, body.lon, body.alt),
            speed_ms=body.speed_ms, heading_deg=body.heading_deg)
        violations = msg.violations()
        if violations:
            raise MessageValidationError(violations)
        fleet.ingest_cam(msg)
        return {"accepted": True}

    @app.post("/priority/request")
    def priority_request(body: schemas.PriorityRequestIn, user: User = Depends(require(DRV))):
        request = PriorityMessage(
            platform.signals.new_message_id(), PriorityDirection.Request, body.vehicle_id,
            body.intersection_id, body.approach_id, body.predicted_arrival)
        response = platform.signals.request_priority(request, now_fn())
        return json.loads(encode(response))

    # ---- traffic management ----

    @app.get("/events")
    def list_events(user: User = Depends(require(TM))):
        return {"events": [
            {"event_id": e.event_id, "cause": e.cause, "valid_from": e.valid_from,
             "valid_to": e.valid_to, "source": e.source.value,
             "zone": {"lat": e.zone.center.lat, "lon": e.zone.center.lon,
                      "radius_m": e.zone.radius_m},
             "free_text": e.free_text}
            for e in platform.geomessenger.active_events()]}

    @app.post("/events", status_code=201)
    def register_event(body: schemas.EventIn, user: User = Depends(require(TM))):
        event = TrafficEvent(
            event_id=body.event_id, cause=body.cause,
            zone=RelevanceZone(GeoPoint(body.zone.lat, body.zone.lon), body.zone.radius_m),
            valid_from=body.valid_from, valid_to=body.valid_to,
            source=EventSource.Manual, free_text=body.free_text)
        event_id = platform.geomessenger.register_event(event, now_fn())
        return {"event_id": event_id}

    @app.get("/signals")
    def signal_plans(user: User = Depends(require(TM))):
        return platform.signals_doc()

    @app.get("/network/graph")
    def network_graph(user: User = Depends(require(FM, TM))):
        return platform.graph_doc()

    @app.get("/network/edges/{edge_id}/prediction")
    def edge_prediction(edge_id: str, horizon_s: float = 0.0,
                        user: User = Depends(require(TM))):
        platform.graph.edge(edge_id)
        history = platform.geomessenger.travel_time_history(edge_id)
        if not history:
            raise HTTPException(422, f"no travel-time history for edge {edge_id!r} yet")
        return {"edge_id": edge_id, "horizon_s": horizon_s,
                "predicted_travel_time_s": predict_travel_time(history, horizon_s)}

    @app.get("/tmc/export")
    def tmc_export(window_from: float, window_to: float,
                   user: User = Depends(require(TM))):
        return fleet.tmc_exchange(window_from, window_to)

    @app.post("/tmc/events")
    def tmc_events(body: schemas.TmcEventsIn, user: User = Depends(require(TM))):
        return fleet.tmc_ingest(body.events, now_fn())

    # ---- broker binding ----

    @app.post("/broker/subscriptions", status_code=201)
    def subscribe(body: schemas.SubscriptionCreate,
                  user: User = Depends(require(FM, TM, DRV))):
        zone = RelevanceZone(GeoPoint(body.geofence.lat, body.geofence.lon),
                             body.geofence.radius_m)
        sub_id = platform.broker.subscribe(body.subscriber_id, zone,
                                           set(body.type_filter), now_fn())
        return {"sub_id": sub_id}

    @app.delete("/broker/subscriptions/{sub_id}")
    def unsubscribe(sub_id: str, user: User = Depends(require(FM, TM, DRV))):
        platform.broker.unsubscribe(sub_id)
        return {"sub_id": sub_id, "status": "unsubscribed"}

    @app.get("/broker/subscriptions/{sub_id}/messages")
    def drain_subscription(sub_id: str, user: User = Depends(require(FM, TM, DRV))):
        return {"messages": [json.loads(encode(m))
                             for m in platform.broker.drain(sub_id)]}

    # ---- live streams (newline-delimited JSON) ----

    DRIVER_EVENTS = {"advisory", "grant"}

    def _stream_response(event_filter=None, limit: Optional[int] = None):
        """NDJSON event stream with 1 s heartbeats; limit bounds the number of
        data events before the stream closes (handy for curl and tests)."""
        queue: asyncio.Queue = asyncio.Queue()
        loop = asyncio.get_running_loop()

        def listener(doc: dict):
            if event_filter is None or doc.get("event") in event_filter:
                loop.call_soon_threadsafe(queue.put_nowait, doc)

        detach = platform.hub.attach(listener)

        async def gen():
            sent = 0
            try:
                yield json.dumps({"event": "hello", "timestamp": now_fn()}) + "\n"
                while limit is None or sent < limit:
                    try:
                        doc = await asyncio.wait_for(queue.get(), timeout=1.0)
                        yield json.dumps(doc, sort_keys=True) + "\n"
                        sent += 1
                    except asyncio.TimeoutError:
                        yield json.dumps({"event": "heartbeat", "timestamp": now_fn()}) + "\n"
            finally:
                detach()

        return StreamingResponse(gen(), media_type="application/x-ndjson")

    @app.get("/stream")
    async def stream(limit: Optional[int] = None, user: User = Depends(require(FM))):
        return _stream_response(limit=limit)

    @app.get("/stream/driver")
    async def driver_stream(limit: Optional[int] = None,
                            user: User = Depends(require(DRV))):
        return _stream_response(DRIVER_EVENTS, limit=limit)

    return app
