"""Turns traffic events into repeated hazard/advisory broadcasts and watches
the CAM stream for congestion.

Event pipeline: registered events (manual, TMC, or auto-detected) are
re-broadcast every repeat_s until they expire. Congestion detection is
per-edge with hysteresis: onset when the trailing-window mean speed drops
below onset_ratio x free-flow with enough distinct vehicles, clearance when
the mean recovers past clear_ratio x free-flow or the window stays empty.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .config import GeomessengerConfig
from .broker import GeoBroker
from .messages import (
    HazardCause,
    HazardMessage,
    IvimKind,
    IvimMessage,
    Message,
    MessageIdFactory,
    RelevanceZone,
)
from .network import RoadGraph, SpeedSample, map_match, update_edge_speed
from .network.graph import edge_travel_time

CONGESTION_CAUSE = "Congestion"
EVENT_CAUSES = tuple(c.wire_name for c in HazardCause) + (CONGESTION_CAUSE,)


class EventSource(str, Enum):
    Manual = "Manual"
    TMC = "TMC"
    AutoDetected = "AutoDetected"


class CongestionTransition(Enum):
    NONE = "None"
    ONSET = "Onset"
    CLEARANCE = "Clearance"


class EventError(ValueError):
    pass


@dataclass(frozen=True)
class TrafficEvent:
    """A condition worth telling road users about, with its relevance zone."""

    event_id: str
    cause: str  # a HazardCause wire name, or "Congestion"
    zone: RelevanceZone
    valid_from: float
    valid_to: float
    source: EventSource = EventSource.Manual
    free_text: Optional[str] = None

    def __post_init__(self):
        if self.cause not in EVENT_CAUSES:
            raise EventError(f"unknown event cause {self.cause!r}")
        if not self.valid_from < self.valid_to:
            raise EventError(f"event {self.event_id!r}: valid_from must precede valid_to")
        bad = self.zone.violations()
        if bad:
            raise EventError(f"event {self.event_id!r}: " + "; ".join(bad))
        if self.cause == HazardCause.VmsFreeText.wire_name and not self.free_text:
            raise EventError(f"event {self.event_id!r}: free_text required for VmsFreeText")


@dataclass
class _ActiveEvent:
    event: TrafficEvent
    last_emit_at: float | None = None


@dataclass
class EdgeCongestionState:
    edge_id: str
    window: deque = field(default_factory=deque)  # (timestamp, speed, vehicle_id)
    congested: bool = False
    since: float | None = None
    last_sample_at: float | None = None


class Geomessenger:
    def __init__(self, graph: RoadGraph, broker: GeoBroker,
                 config: GeomessengerConfig | None = None,
                 id_factory: MessageIdFactory | None = None,
                 originator: str = "geomessenger"):
        self.graph = graph
        self.broker = broker
        self.config = config or GeomessengerConfig()
        self._events: dict[str, _ActiveEvent] = {}
        self._edges: dict[str, EdgeCongestionState] = {}
        self._congestion_events: dict[str, str] = {}  # edge_id -> event_id
        self._travel_time_history: dict[str, deque] = {}
        self._ids = id_factory or MessageIdFactory()
        self._event_counter = 0
        self._lock = threading.RLock()
        self.originator = originator
        self.dropped_cams = 0

    # ---- event registry ----

    def register_event(self, event: TrafficEvent, now: float) -> str:
        """Store the event; the next tick starts broadcasting it."""
        if event.valid_to < now:
            raise EventError(f"event validity ended at {event.valid_to}, now is {now}")
        with self._lock:
            event_id = event.event_id
            if not event_id:
                self._event_counter += 1
                event_id = f"evt-{self._event_counter:06d}"
                event = TrafficEvent(event_id, event.cause, event.zone, event.valid_from,
                                     event.valid_to, event.source, event.free_text)
            if event_id in self._events:
                raise EventError(f"event {event_id!r} already registered")
            self._events[event_id] = _ActiveEvent(event)
            return event_id

    def cancel_event(self, event_id: str) -> None:
        with self._lock:
            self._events.pop(event_id, None)

    def active_events(self) -> list[TrafficEvent]:
        with self._lock:
            return [a.event for a in self._events.values()]

    # ---- CAM ingestion and congestion detection ----

    def ingest_cam(self, msg) -> None:
        """Attribute the CAM's speed to an edge; off-network CAMs are counted
        and dropped, never raised."""
        match = map_match(self.graph, msg.position)
        if not match.on_network:
            with self._lock:
                self.dropped_cams += 1
            return
        with self._lock:
            state = self._edges.setdefault(match.edge_id, EdgeCongestionState(match.edge_id))
            state.window.append((msg.timestamp, msg.speed_ms, msg.vehicle_id))
            state.last_sample_at = msg.timestamp
            self._trim_window(state, msg.timestamp)
            samples = [SpeedSample(match.edge_id, ts, sp, vid) for ts, sp, vid in state.window]
        update_edge_speed(self.graph, match.edge_id, samples, now=msg.timestamp)

    def _trim_window(self, state: EdgeCongestionState, now: float) -> None:
        cutoff = now - self.config.window_s
        while state.window and state.window[0][0] < cutoff:
            state.window.popleft()

    def evaluate_congestion(self, edge_id: str, now: float) -> CongestionTransition:
        """Apply the hysteresis rule for one edge and stage the advisory."""
        edge = self.graph.edge(edge_id)
        with self._lock:
            state = self._edges.setdefault(edge_id, EdgeCongestionState(edge_id))
            self._trim_window(state, now)
            speeds = [sp for _, sp, _ in state.window]
            vehicles = {vid for _, _, vid in state.window}
            mean = sum(speeds) / len(speeds) if speeds else None

            if not state.congested:
                if (mean is not None
                        and mean < self.config.congestion_onset_ratio * edge.free_flow_speed_ms
                        and len(vehicles) >= self.config.min_vehicles):
                    state.congested = True
                    state.since = now
                    self._stage_congestion_event(edge_id, now)
                    return CongestionTransition.ONSET
                return CongestionTransition.NONE

            window_stale = (not state.window and state.last_sample_at is not None
                            and now - state.last_sample_at >= self.config.stale_clear_s)
            if (mean is not None
                    and mean >= self.config.congestion_clear_ratio * edge.free_flow_speed_ms) \
                    or window_stale:
                state.congested = False
                state.since = None
                event_id = self._congestion_events.pop(edge_id, None)
                if event_id:
                    self._events.pop(event_id, None)
                return CongestionTransition.CLEARANCE
            return CongestionTransition.NONE

    def _stage_congestion_event(self, edge_id: str, now: float) -> None:
        zone = RelevanceZone(self.graph.edge_midpoint(edge_id),
                             self.config.congestion_zone_radius_m)
        self._event_counter += 1
        event_id = f"evt-{self._event_counter:06d}"
        self._events[event_id] = _ActiveEvent(TrafficEvent(
            event_id, CONGESTION_CAUSE, zone, now, now + self.config.advisory_validity_s,
            EventSource.AutoDetected))
        self._congestion_events[edge_id] = event_id

    def congestion_state(self, edge_id: str) -> EdgeCongestionState | None:
        with self._lock:
            return self._edges.get(edge_id)

    # ---- periodic driver ----

    def tick(self, now: float) -> list[Message]:
        """Expire and re-emit events, refresh edge beliefs, run detection."""
        with self._lock:
            tracked = list(self._edges.keys())

        for edge_id in tracked:
            state = self._edges[edge_id]
            with self._lock:
                self._trim_window(state, now)
                samples = [SpeedSample(edge_id, ts, sp, vid) for ts, sp, vid in state.window]
            update_edge_speed(self.graph, edge_id, samples, now=now)
            self.evaluate_congestion(edge_id, now)
        for edge_id in self.graph.edges:
            history = self._travel_time_history.setdefault(edge_id, deque(maxlen=600))
            history.append((now, edge_travel_time(self.graph.edge(edge_id))))

        published: list[Message] = []
        with self._lock:
            for event_id in [eid for eid, a in self._events.items()
                             if a.event.valid_to < now]:
                del self._events[event_id]
            due = [a for a in self._events.values()
                   if a.last_emit_at is None or now - a.last_emit_at >= self.config.repeat_s]
        for active in due:
            event = active.event
            if event.cause == CONGESTION_CAUSE and event.valid_to < now + self.config.repeat_s:
                # still congested: keep the advisory alive past its initial window
                event = TrafficEvent(event.event_id, event.cause, event.zone, event.valid_from,
                                     now + self.config.advisory_validity_s, event.source)
                active.event = event
            msg = self._message_for(event)
            self.broker.publish(msg, now=now)
            active.last_emit_at = now
            published.append(msg)
        return published

    def _message_for(self, event: TrafficEvent) -> Message:
        if event.cause == CONGESTION_CAUSE:
            return IvimMessage(self._ids.next(), IvimKind.TrafficCongestion, event.zone,
                               {}, event.valid_from, event.valid_to)
        cause = HazardCause.from_wire(event.cause)
        if cause is HazardCause.VmsFreeText:
            return IvimMessage(self._ids.next(), IvimKind.VmsFreeText, event.zone,
                               {"text": event.free_text}, event.valid_from, event.valid_to)
        return HazardMessage(self._ids.next(), cause, event.zone, event.valid_from,
                             event.valid_to, self.originator, event.free_text)

    # ---- forecasting surface ----

    def travel_time_history(self, edge_id: str) -> list[tuple[float, float]]:
        with self._lock:
            return list(self._travel_time_history.get(edge_id, ()))
