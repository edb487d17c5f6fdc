"""Fixed-time signalized intersections: phase queries, speed advice, priority.

A plan is periodic with period cycle_s; each approach owns one green window
[green_start, green_start + green_duration) interpreted cyclically (windows
may wrap across the cycle boundary). Priority grants overlay a bounded green
extension for one approach; everything else stays periodic.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from enum import Enum

from .geo import GeoPoint
from .messages import (
    MessageIdFactory,
    PriorityDirection,
    PriorityMessage,
    PriorityVerdict,
)

MAX_EXTENSION_S = 15.0
GLOSA_HORIZON_CYCLES = 2.0


class SignalError(ValueError):
    pass


class UnknownIntersectionError(KeyError):
    pass


class UnknownApproachError(KeyError):
    pass


class Phase(str, Enum):
    Green = "Green"
    Red = "Red"


@dataclass(frozen=True)
class Approach:
    approach_id: str
    green_start_s: float
    green_duration_s: float


@dataclass(frozen=True)
class SignalPlan:
    intersection_id: str
    position: GeoPoint
    cycle_s: float
    approaches: tuple[Approach, ...]

    def __post_init__(self):
        if self.cycle_s <= 0:
            raise SignalError(f"{self.intersection_id}: cycle must be > 0")
        seen = set()
        for a in self.approaches:
            if a.approach_id in seen:
                raise SignalError(f"{self.intersection_id}: duplicate approach {a.approach_id!r}")
            seen.add(a.approach_id)
            if not 0 <= a.green_start_s < self.cycle_s:
                raise SignalError(f"{self.intersection_id}/{a.approach_id}: green_start outside "
                                  f"[0, {self.cycle_s})")
            if not 0 < a.green_duration_s <= self.cycle_s:
                raise SignalError(f"{self.intersection_id}/{a.approach_id}: green_duration outside "
                                  f"(0, {self.cycle_s}]")

    def approach(self, approach_id: str) -> Approach:
        for a in self.approaches:
            if a.approach_id == approach_id:
                return a
        raise UnknownApproachError(approach_id)


@dataclass(frozen=True)
class PriorityGrant:
    """One green extension: the approach's green window ending at starts_at is
    stretched to expires_at (closed), then the plan is periodic again."""

    intersection_id: str
    vehicle_id: str
    approach_id: str
    extension_s: float
    starts_at: float
    expires_at: float
    issued_at: float


def _phase_in_plan(plan: SignalPlan, approach: Approach, t: float) -> tuple[Phase, float]:
    rel = (t - approach.green_start_s) % plan.cycle_s
    if rel < approach.green_duration_s:
        return Phase.Green, approach.green_duration_s - rel
    return Phase.Red, plan.cycle_s - rel


def signal_state(plan: SignalPlan, approach_id: str, t: float,
                 grant: PriorityGrant | None = None) -> tuple[Phase, float]:
    """Phase at instant t and seconds until it changes.

    The green window is half-open; a grant for this approach forces Green on
    [starts_at, expires_at] (closed, so the granted arrival instant itself
    is still Green).
    """
    approach = plan.approach(approach_id)
    phase, until = _phase_in_plan(plan, approach, t)
    if grant is None or grant.approach_id != approach_id:
        return phase, until
    if grant.starts_at <= t <= grant.expires_at:
        return Phase.Green, grant.expires_at - t
    if phase is Phase.Green and math.isclose(t + until, grant.starts_at, abs_tol=1e-9):
        # base green flows straight into the extension
        return Phase.Green, grant.expires_at - t
    return phase, until


def _green_window_starts(plan: SignalPlan, approach: Approach, t_from: float, t_to: float):
    """Absolute start times of green windows intersecting [t_from, t_to]."""
    k = math.floor((t_from - approach.green_start_s - approach.green_duration_s) / plan.cycle_s)
    starts = []
    while True:
        s = approach.green_start_s + k * plan.cycle_s
        if s > t_to:
            break
        if s + approach.green_duration_s > t_from:
            starts.append(s)
        k += 1
    return starts


def glosa_advice(plan: SignalPlan, approach_id: str, distance_m: float, t: float,
                 v_min: float, v_max: float,
                 grant: PriorityGrant | None = None) -> float | None:
    """Highest constant speed in [v_min, v_max] that arrives on Green.

    Arrival candidates are limited to a horizon of two cycles. Returns None
    when no feasible speed exists. The arrival instant is judged by
    signal_state, so grant overlays are honored.
    """
    if distance_m <= 0:
        raise SignalError(f"distance must be > 0, got {distance_m}")
    if not (0 < v_min <= v_max):
        raise SignalError(f"speed bounds must satisfy 0 < v_min <= v_max, got [{v_min}, {v_max}]")
    approach = plan.approach(approach_id)
    horizon = GLOSA_HORIZON_CYCLES * plan.cycle_s
    arrive_earliest = t + distance_m / v_max
    arrive_latest = min(t + distance_m / v_min, t + horizon)
    if arrive_earliest > arrive_latest:
        return None  # even flat-out the arrival falls beyond the horizon

    def speed_for(arrival: float) -> float | None:
        """Clamp to the bounds and confirm the rounded-back arrival is Green;
        division rounding can land one ulp outside the window, so nudge."""
        for eps in (0.0, 1e-9 * max(1.0, abs(arrival)), 1e-6):
            shifted = arrival + eps
            if shifted <= t or shifted > arrive_latest + 1e-6:
                continue
            v = min(max(distance_m / (shifted - t), v_min), v_max)
            check = t + distance_m / v
            if check - t <= horizon + 1e-6 \
                    and signal_state(plan, approach_id, check, grant)[0] is Phase.Green:
                return v
        return None

    candidates = []
    for s in _green_window_starts(plan, approach, arrive_earliest, arrive_latest):
        candidate = max(s, arrive_earliest)
        if candidate > arrive_latest or candidate >= s + approach.green_duration_s:
            continue
        candidates.append(candidate)
    if grant is not None and grant.approach_id == approach_id:
        g0 = max(grant.starts_at, arrive_earliest)
        if g0 <= min(grant.expires_at, arrive_latest):
            candidates.append(g0)
    for arrival in sorted(candidates):
        v = speed_for(arrival)
        if v is not None:
            return v
    return None


class SignalService:
    """Owns the signal plans and the at-most-one-grant-per-intersection rule."""

    def __init__(self, plans: dict[str, SignalPlan], broker=None, hub=None,
                 max_extension_s: float = MAX_EXTENSION_S,
                 id_factory: MessageIdFactory | None = None):
        self.plans = dict(plans)
        self._grants: dict[str, PriorityGrant] = {}
        self._lock = threading.Lock()
        self._broker = broker
        self._hub = hub
        self.max_extension_s = max_extension_s
        self._ids = id_factory or MessageIdFactory()

    def plan(self, intersection_id: str) -> SignalPlan:
        try:
            return self.plans[intersection_id]
        except KeyError:
            raise UnknownIntersectionError(intersection_id) from None

    def new_message_id(self) -> str:
        return self._ids.next()

    def active_grant(self, intersection_id: str, now: float) -> PriorityGrant | None:
        with self._lock:
            grant = self._grants.get(intersection_id)
            if grant is not None and now > grant.expires_at:
                del self._grants[intersection_id]
                grant = None
            return grant

    def state(self, intersection_id: str, approach_id: str, t: float) -> tuple[Phase, float]:
        plan = self.plan(intersection_id)
        return signal_state(plan, approach_id, t, self.active_grant(intersection_id, t))

    def advice(self, intersection_id: str, approach_id: str, distance_m: float, t: float,
               v_min: float, v_max: float) -> float | None:
        plan = self.plan(intersection_id)
        return glosa_advice(plan, approach_id, distance_m, t, v_min, v_max,
                            self.active_grant(intersection_id, t))

    def request_priority(self, req: PriorityMessage, now: float) -> PriorityMessage:
        """Apply the grant rule and answer with a Response (also broadcast)."""
        if req.direction is not PriorityDirection.Request:
            raise SignalError("request_priority needs a Request message")
        if req.predicted_arrival < now:
            raise SignalError(f"predicted arrival {req.predicted_arrival} is in the past "
                              f"(now {now})")
        plan = self.plan(req.intersection_id)
        approach = plan.approach(req.approach_id)

        verdict = PriorityVerdict.Denied
        extension = 0.0
        with self._lock:
            grant = self._grants.get(req.intersection_id)
            if grant is not None and now > grant.expires_at:
                del self._grants[req.intersection_id]
                grant = None
            if grant is None:
                phase, _ = _phase_in_plan(plan, approach, req.predicted_arrival)
                if phase is Phase.Green:
                    verdict = PriorityVerdict.Granted  # already served, nothing to actuate
                else:
                    rel = (req.predicted_arrival - approach.green_start_s) % plan.cycle_s
                    gap = rel - approach.green_duration_s  # seconds since the green ended
                    # keep total green within the cycle even at max extension
                    allowed = min(self.max_extension_s, plan.cycle_s - approach.green_duration_s)
                    if 0 <= gap <= allowed:
                        verdict = PriorityVerdict.Granted
                        extension = gap
                        green_end_abs = req.predicted_arrival - gap
                        self._grants[req.intersection_id] = PriorityGrant(
                            intersection_id=req.intersection_id,
                            vehicle_id=req.vehicle_id,
                            approach_id=req.approach_id,
                            extension_s=extension,
                            starts_at=green_end_abs,
                            expires_at=green_end_abs + extension,
                            issued_at=now,
                        )

        response = PriorityMessage(
            msg_id=self._ids.next(),
            direction=PriorityDirection.Response,
            vehicle_id=req.vehicle_id,
            intersection_id=req.intersection_id,
            approach_id=req.approach_id,
            predicted_arrival=req.predicted_arrival,
            verdict=verdict,
        )
        if self._broker is not None:
            self._broker.publish(response, sender_position=plan.position, now=now)
        if self._hub is not None:
            self._hub.priority_decided(response, extension, now)
        return response


def load_signal_plans(document: str | bytes | dict) -> dict[str, SignalPlan]:
    """Parse {"intersections":[{"id","lat","lon","cycle_s","approaches":[...]}]}."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SignalError(f"signal plan document is not valid JSON: {exc}") from exc
    else:
        doc = document
    plans = {}
    for raw in doc.get("intersections", []):
        approaches = tuple(
            Approach(str(a["id"]), float(a["green_start_s"]), float(a["green_duration_s"]))
            for a in raw.get("approaches", [])
        )
        plan = SignalPlan(
            intersection_id=str(raw["id"]),
            position=GeoPoint(float(raw["lat"]), float(raw["lon"])),
            cycle_s=float(raw["cycle_s"]),
            approaches=approaches,
        )
        if plan.intersection_id in plans:
            raise SignalError(f"duplicate intersection id {plan.intersection_id!r}")
        plans[plan.intersection_id] = plan
    return plans
