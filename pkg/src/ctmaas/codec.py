"""Canonical JSON wire codec for the four message families.

Canonical form: one JSON object per message, keys sorted lexicographically
at every level, compact separators, UTF-8, optional fields omitted when
unset. Wire precision is fixed here: degrees carry up to 6 decimals, speeds
and meters 2, timestamps 3; two structurally equal messages therefore
serialize to identical bytes.

Decode distinguishes three failure classes: MalformedMessageError (not a
JSON object), UnknownMessageTypeError (bad msg_type), and
MessageValidationError (invariant violations).
"""

from __future__ import annotations

import json

from .geo import GeoPoint
from .messages import (
    CamMessage,
    HazardCause,
    HazardMessage,
    IvimKind,
    IvimMessage,
    Message,
    MessageValidationError,
    PriorityDirection,
    PriorityMessage,
    PriorityVerdict,
    RelevanceZone,
    round_degrees,
    round_heading,
    round_meters,
    round_seconds,
    round_speed,
    validate,
)


class MalformedMessageError(ValueError):
    """Input is not a JSON object at all."""


class UnknownMessageTypeError(ValueError):
    def __init__(self, msg_type):
        super().__init__(f"unknown msg_type {msg_type!r}")
        self.msg_type = msg_type


def _point_doc(p: GeoPoint) -> dict:
    return {"lat": round_degrees(p.lat), "lon": round_degrees(p.lon),
            "alt": round_meters(p.alt)}


def _zone_doc(z: RelevanceZone) -> dict:
    return {"center": _point_doc(z.center), "radius_m": round_meters(z.radius_m)}


def _payload_doc(payload: dict) -> dict:
    doc = dict(payload)
    if "advised_speed_ms" in doc:
        doc["advised_speed_ms"] = round_speed(doc["advised_speed_ms"])
    return doc


def _to_doc(msg: Message) -> dict:
    if isinstance(msg, CamMessage):
        return {
            "msg_type": "CAM",
            "station_id": msg.station_id,
            "vehicle_id": msg.vehicle_id,
            "trip_id": msg.trip_id,
            "driver_id": msg.driver_id,
            "timestamp": round_seconds(msg.timestamp),
            "position": _point_doc(msg.position),
            "speed_ms": round_speed(msg.speed_ms),
            "heading_deg": round_heading(msg.heading_deg),
        }
    if isinstance(msg, HazardMessage):
        doc = {
            "msg_type": "HAZARD",
            "msg_id": msg.msg_id,
            "cause": msg.cause.wire_name,
            "zone": _zone_doc(msg.zone),
            "valid_from": round_seconds(msg.valid_from),
            "valid_to": round_seconds(msg.valid_to),
            "originator": msg.originator,
        }
        if msg.free_text is not None:
            doc["free_text"] = msg.free_text
        return doc
    if isinstance(msg, IvimMessage):
        return {
            "msg_type": "IVIM",
            "msg_id": msg.msg_id,
            "kind": msg.kind.value,
            "zone": _zone_doc(msg.zone),
            "payload": _payload_doc(msg.payload),
            "valid_from": round_seconds(msg.valid_from),
            "valid_to": round_seconds(msg.valid_to),
        }
    if isinstance(msg, PriorityMessage):
        doc = {
            "msg_type": "PRIORITY",
            "msg_id": msg.msg_id,
            "direction": msg.direction.value,
            "vehicle_id": msg.vehicle_id,
            "intersection_id": msg.intersection_id,
            "approach_id": msg.approach_id,
            "predicted_arrival": round_seconds(msg.predicted_arrival),
        }
        if msg.verdict is not None:
            doc["verdict"] = msg.verdict.value
        return doc
    raise TypeError(f"not a wire message: {type(msg).__name__}")


def encode(msg: Message) -> bytes:
    """Validate then serialize to canonical JSON bytes."""
    validate(msg)
    return json.dumps(_to_doc(msg), sort_keys=True, separators=(",", ":"),
                      allow_nan=False).encode("utf-8")


def _need(doc: dict, key: str):
    if key not in doc:
        raise MessageValidationError([f"missing field {key!r}"])
    return doc[key]


def _num(doc: dict, key: str) -> float:
    v = _need(doc, key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise MessageValidationError([f"field {key!r} must be a number, got {v!r}"])
    return float(v)


def _text(doc: dict, key: str) -> str:
    v = _need(doc, key)
    if not isinstance(v, str):
        raise MessageValidationError([f"field {key!r} must be a string, got {v!r}"])
    return v


def _parse_point(doc, context: str) -> GeoPoint:
    if not isinstance(doc, dict):
        raise MessageValidationError([f"{context} must be an object"])
    try:
        return GeoPoint(_num(doc, "lat"), _num(doc, "lon"),
                        _num(doc, "alt") if "alt" in doc else 0.0)
    except ValueError as exc:
        raise MessageValidationError([f"{context}: {exc}"]) from exc


def _parse_zone(doc, context: str = "zone") -> RelevanceZone:
    if not isinstance(doc, dict):
        raise MessageValidationError([f"{context} must be an object"])
    return RelevanceZone(_parse_point(_need(doc, "center"), f"{context}.center"),
                         _num(doc, "radius_m"))


def decode(data: bytes | str) -> Message:
    """Parse canonical (or any) JSON bytes into a fully validated message."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedMessageError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedMessageError(f"expected a JSON object, got {type(doc).__name__}")

    msg_type = doc.get("msg_type")
    if msg_type == "CAM":
        msg = CamMessage(
            station_id=_text(doc, "station_id"),
            vehicle_id=_text(doc, "vehicle_id"),
            trip_id=_text(doc, "trip_id"),
            driver_id=_text(doc, "driver_id"),
            timestamp=_num(doc, "timestamp"),
            position=_parse_point(_need(doc, "position"), "position"),
            speed_ms=_num(doc, "speed_ms"),
            heading_deg=_num(doc, "heading_deg"),
        )
    elif msg_type == "HAZARD":
        try:
            cause = HazardCause.from_wire(_text(doc, "cause"))
        except ValueError as exc:
            raise MessageValidationError([str(exc)]) from exc
        free_text = doc.get("free_text")
        if free_text is not None and not isinstance(free_text, str):
            raise MessageValidationError(["free_text must be a string"])
        msg = HazardMessage(
            msg_id=_text(doc, "msg_id"),
            cause=cause,
            zone=_parse_zone(_need(doc, "zone")),
            valid_from=_num(doc, "valid_from"),
            valid_to=_num(doc, "valid_to"),
            originator=_text(doc, "originator"),
            free_text=free_text,
        )
    elif msg_type == "IVIM":
        kind_name = _text(doc, "kind")
        try:
            kind = IvimKind(kind_name)
        except ValueError as exc:
            raise MessageValidationError([f"unknown advisory kind {kind_name!r}"]) from exc
        payload = _need(doc, "payload")
        if not isinstance(payload, dict):
            raise MessageValidationError(["payload must be an object"])
        msg = IvimMessage(
            msg_id=_text(doc, "msg_id"),
            kind=kind,
            zone=_parse_zone(_need(doc, "zone")),
            payload=payload,
            valid_from=_num(doc, "valid_from"),
            valid_to=_num(doc, "valid_to"),
        )
    elif msg_type == "PRIORITY":
        direction_name = _text(doc, "direction")
        try:
            direction = PriorityDirection(direction_name)
        except ValueError as exc:
            raise MessageValidationError([f"unknown direction {direction_name!r}"]) from exc
        verdict = None
        if "verdict" in doc:
            try:
                verdict = PriorityVerdict(_text(doc, "verdict"))
            except ValueError as exc:
                raise MessageValidationError([f"unknown verdict {doc['verdict']!r}"]) from exc
        msg = PriorityMessage(
            msg_id=_text(doc, "msg_id"),
            direction=direction,
            vehicle_id=_text(doc, "vehicle_id"),
            intersection_id=_text(doc, "intersection_id"),
            approach_id=_text(doc, "approach_id"),
            predicted_arrival=_num(doc, "predicted_arrival"),
            verdict=verdict,
        )
    else:
        raise UnknownMessageTypeError(msg_type)

    validate(msg)
    return msg
