"""Geo-scoped publish/subscribe hub.

Subscribers register a circular geofence plus a message-type filter; a
published message is delivered to every subscription whose filter matches
and whose geofence intersects the message's relevance zone (circle-circle:
center distance <= sum of radii, exact under haversine). Messages without
an embedded zone (CAM, PRIORITY) are given a default circle at the sender's
position, mirroring radio range.

All entry points are thread-safe; each publish works against a consistent
snapshot of the subscription table.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from .geo import GeoPoint, haversine_m
from .messages import (
    CamMessage,
    Message,
    MessageValidationError,
    PriorityMessage,
    RelevanceZone,
    message_validity,
    message_zone,
    validate,
)

DEFAULT_SENDER_ZONE_RADIUS_M = 1000.0

MSG_TYPES = ("CAM", "HAZARD", "IVIM", "PRIORITY")


class UnknownSubscriptionError(KeyError):
    def __init__(self, sub_id: str):
        super().__init__(sub_id)
        self.sub_id = sub_id


class ExpiredMessageError(ValueError):
    pass


def msg_type_of(msg: Message) -> str:
    from .messages import HazardMessage, IvimMessage  # local to avoid cycle noise

    if isinstance(msg, CamMessage):
        return "CAM"
    if isinstance(msg, HazardMessage):
        return "HAZARD"
    if isinstance(msg, IvimMessage):
        return "IVIM"
    if isinstance(msg, PriorityMessage):
        return "PRIORITY"
    raise TypeError(f"not a wire message: {type(msg).__name__}")


@dataclass(frozen=True)
class Subscription:
    sub_id: str
    subscriber_id: str
    geofence: RelevanceZone
    type_filter: frozenset[str]  # empty set matches every family
    created_at: float

    def matches(self, msg_type: str, zone: RelevanceZone) -> bool:
        if self.type_filter and msg_type not in self.type_filter:
            return False
        return haversine_m(zone.center, self.geofence.center) <= zone.radius_m + self.geofence.radius_m


@dataclass(frozen=True)
class Delivery:
    msg_id: str
    sub_id: str
    subscriber_id: str
    delivered_at: float


class GeoBroker:
    def __init__(self, hub=None, cam_zone_radius_m: float = DEFAULT_SENDER_ZONE_RADIUS_M):
        self._subs: dict[str, Subscription] = {}
        self._seen: set[tuple[str, str]] = set()
        self._inboxes: dict[str, list] = {}
        self._lock = threading.Lock()
        self._sub_counter = 0
        self._anon_counter = 0
        self._hub = hub
        self.cam_zone_radius_m = cam_zone_radius_m

    def subscribe(self, subscriber_id: str, geofence: RelevanceZone,
                  type_filter: set[str] | frozenset[str] = frozenset(),
                  now: float = 0.0) -> str:
        bad = geofence.violations("geofence")
        if bad:
            raise MessageValidationError(bad)
        unknown = set(type_filter) - set(MSG_TYPES)
        if unknown:
            raise ValueError(f"unknown msg_type values in filter: {sorted(unknown)}")
        with self._lock:
            self._sub_counter += 1
            sub_id = f"sub-{self._sub_counter:06d}"
            self._subs[sub_id] = Subscription(sub_id, subscriber_id, geofence,
                                              frozenset(type_filter), now)
            self._inboxes[sub_id] = []
            return sub_id

    def unsubscribe(self, sub_id: str) -> None:
        with self._lock:
            if sub_id not in self._subs:
                raise UnknownSubscriptionError(sub_id)
            del self._subs[sub_id]
            self._inboxes.pop(sub_id, None)

    def subscriptions(self) -> list[Subscription]:
        with self._lock:
            return list(self._subs.values())

    def drain(self, sub_id: str) -> list:
        """Pop and return the messages queued for a subscription."""
        with self._lock:
            if sub_id not in self._subs:
                raise UnknownSubscriptionError(sub_id)
            out = self._inboxes[sub_id]
            self._inboxes[sub_id] = []
            return out

    def publish(self, msg: Message, sender_position: GeoPoint | None = None,
                now: float = 0.0) -> list[Delivery]:
        """Deliver msg to every matching subscription, ordered by sub_id."""
        validate(msg)
        validity = message_validity(msg)
        if validity is not None and validity[1] < now:
            raise ExpiredMessageError(
                f"message expired at {validity[1]}, publish requested at {now}")

        zone = message_zone(msg)
        if zone is None:
            if sender_position is None:
                raise ValueError(f"{msg_type_of(msg)} message needs sender_position to "
                                 "derive its relevance zone")
            zone = RelevanceZone(sender_position, self.cam_zone_radius_m)
        mtype = msg_type_of(msg)
        msg_id = getattr(msg, "msg_id", None)
        with self._lock:
            if msg_id is None:
                self._anon_counter += 1
                msg_id = f"{mtype.lower()}-{self._anon_counter:08d}"
            subs = sorted(self._subs.values(), key=lambda s: s.sub_id)
            deliveries = []
            for sub in subs:
                if not sub.matches(mtype, zone):
                    continue
                key = (msg_id, sub.sub_id)
                if key in self._seen:
                    continue
                self._seen.add(key)
                self._inboxes[sub.sub_id].append(msg)
                deliveries.append(Delivery(msg_id, sub.sub_id, sub.subscriber_id, now))
        if self._hub is not None:
            self._hub.message_published(msg, zone, deliveries, now)
        return deliveries
