"""In-process fan-out of live platform events to stream consumers.

The fleet service, broker, and signal service push typed events here; the
HTTP layer attaches per-client queues and relays them as newline-delimited
JSON. Listeners must be non-blocking; delivery order follows emission order.
"""

from __future__ import annotations

import json
import threading
from typing import Callable

Listener = Callable[[dict], None]


class EventHub:
    def __init__(self):
        self._listeners: list[Listener] = []
        self._lock = threading.Lock()

    def attach(self, listener: Listener) -> Callable[[], None]:
        with self._lock:
            self._listeners.append(listener)

        def detach():
            with self._lock:
                if listener in self._listeners:
                    self._listeners.remove(listener)

        return detach

    def emit(self, event: str, payload: dict) -> None:
        doc = {"event": event, **payload}
        with self._lock:
            listeners = list(self._listeners)
        for listener in listeners:
            listener(doc)

    # --- convenience emitters used by the owning modules ---

    def position_update(self, vehicle_id: str, trip_id: str, lat: float, lon: float,
                        speed_ms: float, heading_deg: float, timestamp: float) -> None:
        self.emit("position", {
            "vehicle_id": vehicle_id, "trip_id": trip_id, "lat": lat, "lon": lon,
            "speed_ms": speed_ms, "heading_deg": heading_deg, "timestamp": timestamp,
        })

    def message_published(self, msg, zone, deliveries, now: float) -> None:
        from .broker import msg_type_of
        from .codec import encode

        mtype = msg_type_of(msg)
        if mtype == "CAM":
            return  # positions stream separately; CAM fan-out would duplicate them
        self.emit("advisory", {
            "msg_type": mtype,
            "message": json.loads(encode(msg)),
            "zone": {"lat": zone.center.lat, "lon": zone.center.lon, "radius_m": zone.radius_m},
            "delivered": len(deliveries),
            "timestamp": now,
        })

    def proposal_created(self, proposal_doc: dict, now: float) -> None:
        self.emit("proposal", {**proposal_doc, "timestamp": now})

    def proposal_resolved(self, proposal_id: str, status: str, now: float) -> None:
        self.emit("proposal_resolved", {"proposal_id": proposal_id, "status": status,
                                        "timestamp": now})

    def trip_changed(self, trip_doc: dict, now: float) -> None:
        self.emit("trip", {**trip_doc, "timestamp": now})

    def priority_decided(self, response, extension_s: float, now: float) -> None:
        self.emit("grant", {
            "intersection_id": response.intersection_id,
            "vehicle_id": response.vehicle_id,
            "approach_id": response.approach_id,
            "verdict": response.verdict.value,
            "extension_s": extension_s,
            "timestamp": now,
        })
