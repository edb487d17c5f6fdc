// ViewState: the dashboard's only client-side truth. Everything in it comes
// from the API or the stream; a reload rebuilds it from scratch.

import type {
  AdvisoryEvent,
  GrantEvent,
  PositionEvent,
  ProposalDoc,
  StreamEvent,
  TripDoc,
} from "./types.js";

export const DEAD_RECKON_CAP_S = 2.0;

export interface Marker {
  vehicleId: string;
  tripId: string;
  lat: number;
  lon: number;
  speedMs: number;
  headingDeg: number;
  timestamp: number; // stream time
  receivedAtMs: number; // wall clock, for dead reckoning
}

export interface Overlay {
  key: string;
  msgType: string;
  kind: string;
  lat: number;
  lon: number;
  radiusM: number;
  validTo: number | null; // stream time
  receivedAtMs: number;
}

export interface Notice {
  text: string;
  atMs: number;
}

export interface ViewState {
  markers: Map<string, Marker>;
  overlays: Map<string, Overlay>;
  proposals: Map<string, ProposalDoc>;
  trips: Map<string, TripDoc>;
  grants: GrantEvent[];
  notices: Notice[];
  selectedTrip: string | null;
  streamTime: number;
  stale: boolean;
}

export function emptyState(): ViewState {
  return {
    markers: new Map(),
    overlays: new Map(),
    proposals: new Map(),
    trips: new Map(),
    grants: [],
    notices: [],
    selectedTrip: null,
    streamTime: 0,
    stale: false,
  };
}

function overlayFrom(event: AdvisoryEvent, nowMs: number): Overlay {
  const message = event.message as Record<string, any>;
  const kind = (message.kind as string) ?? (message.cause as string) ?? event.msg_type;
  const key = (message.msg_id as string) ?? `${kind}@${event.zone.lat},${event.zone.lon}`;
  return {
    key,
    msgType: event.msg_type,
    kind,
    lat: event.zone.lat,
    lon: event.zone.lon,
    radiusM: event.zone.radius_m,
    validTo: typeof message.valid_to === "number" ? message.valid_to : null,
    receivedAtMs: nowMs,
  };
}

/** Fold one stream event into the state; markers only ever move from here. */
export function applyEvent(state: ViewState, event: StreamEvent, nowMs: number): void {
  if (typeof event.timestamp === "number" && event.timestamp > state.streamTime) {
    state.streamTime = event.timestamp;
  }
  switch (event.event) {
    case "position": {
      const p = event as PositionEvent;
      const existing = state.markers.get(p.vehicle_id);
      if (existing && existing.timestamp > p.timestamp) return; // never rewind
      state.markers.set(p.vehicle_id, {
        vehicleId: p.vehicle_id,
        tripId: p.trip_id,
        lat: p.lat,
        lon: p.lon,
        speedMs: p.speed_ms,
        headingDeg: p.heading_deg,
        timestamp: p.timestamp,
        receivedAtMs: nowMs,
      });
      break;
    }
    case "advisory": {
      const overlay = overlayFrom(event as AdvisoryEvent, nowMs);
      state.overlays.set(overlay.key, overlay);
      break;
    }
    case "proposal": {
      const doc = event as unknown as ProposalDoc & StreamEvent;
      state.proposals.set(doc.proposal_id, {
        proposal_id: doc.proposal_id,
        trip_id: doc.trip_id,
        created_at: doc.created_at,
        expires_at: doc.expires_at,
        edge_ids: doc.edge_ids,
        old_remaining_s: doc.old_remaining_s,
        new_total_s: doc.new_total_s,
        saving_s: doc.saving_s,
      });
      break;
    }
    case "proposal_resolved": {
      const id = event.proposal_id as string;
      if (state.proposals.delete(id)) {
        state.notices.push({ text: `proposal ${id}: ${event.status}`, atMs: nowMs });
      }
      break;
    }
    case "trip": {
      const doc = event as unknown as TripDoc;
      state.trips.set(doc.trip_id, doc);
      break;
    }
    case "grant": {
      state.grants.push(event as GrantEvent);
      if (state.grants.length > 20) state.grants.shift();
      break;
    }
    default:
      break; // hello / heartbeat only refresh streamTime
  }
}

/** Drop overlays whose validity lapsed (judged in stream time, which is the
 * clock their valid_to was written in). */
export function pruneOverlays(state: ViewState): void {
  for (const [key, overlay] of state.overlays) {
    if (overlay.validTo !== null && state.streamTime > overlay.validTo) {
      state.overlays.delete(key);
    }
  }
}

/** Marker position advanced along its heading by at most 2 s of travel. */
export function deadReckon(marker: Marker, wallNowMs: number): { lat: number; lon: number } {
  const dt = Math.min(Math.max((wallNowMs - marker.receivedAtMs) / 1000, 0), DEAD_RECKON_CAP_S);
  if (dt === 0 || marker.speedMs === 0) return { lat: marker.lat, lon: marker.lon };
  const dist = marker.speedMs * dt;
  const rad = (marker.headingDeg * Math.PI) / 180;
  const mPerDegLat = 111_194.93;
  const north = dist * Math.cos(rad);
  const east = dist * Math.sin(rad);
  return {
    lat: marker.lat + north / mPerDegLat,
    lon: marker.lon + east / (mPerDegLat * Math.cos((marker.lat * Math.PI) / 180)),
  };
}
