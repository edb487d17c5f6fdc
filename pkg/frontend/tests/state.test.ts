import { describe, expect, it } from "vitest";

import { applyEvent, deadReckon, emptyState, pruneOverlays } from "../src/state.js";
import type { AdvisoryEvent, PositionEvent, StreamEvent } from "../src/types.js";

function position(vehicle: string, t: number, lon = 0.001): PositionEvent {
  return { event: "position", vehicle_id: vehicle, trip_id: "trip-0001",
           lat: 0, lon, speed_ms: 10, heading_deg: 90, timestamp: t };
}

function advisory(kind: string, msgId: string, validTo: number): AdvisoryEvent {
  return {
    event: "advisory", msg_type: "IVIM", timestamp: validTo - 120,
    message: { kind, msg_id: msgId, valid_to: validTo },
    zone: { lat: 0, lon: 0.009, radius_m: 500 },
    delivered: 1,
  };
}

describe("applyEvent", () => {
  it("creates and moves markers from position events", () => {
    const state = emptyState();
    applyEvent(state, position("veh-1", 10, 0.001), 1000);
    applyEvent(state, position("veh-1", 11, 0.002), 2000);
    expect(state.markers.size).toBe(1);
    expect(state.markers.get("veh-1")!.lon).toBe(0.002);
    expect(state.streamTime).toBe(11);
  });

  it("never rewinds a marker to an older timestamp", () => {
    const state = emptyState();
    applyEvent(state, position("veh-1", 11, 0.002), 1000);
    applyEvent(state, position("veh-1", 10, 0.001), 2000);
    expect(state.markers.get("veh-1")!.lon).toBe(0.002);
  });

  it("stores one overlay per msg_id, replacing re-emissions", () => {
    const state = emptyState();
    applyEvent(state, advisory("TrafficCongestion", "m-1", 200), 0);
    applyEvent(state, advisory("TrafficCongestion", "m-2", 210), 0);
    applyEvent(state, advisory("TrafficCongestion", "m-1", 200), 0);
    expect(state.overlays.size).toBe(2);
  });

  it("tracks proposals and clears them on resolution with a notice", () => {
    const state = emptyState();
    applyEvent(state, {
      event: "proposal", timestamp: 70, proposal_id: "prop-0001",
      trip_id: "trip-0004", created_at: 70, expires_at: 190,
      edge_ids: ["e1", "e7", "e6"], old_remaining_s: 430,
      new_total_s: 200, saving_s: 230,
    } as unknown as StreamEvent, 0);
    expect(state.proposals.get("prop-0001")!.saving_s).toBe(230);
    applyEvent(state, { event: "proposal_resolved", timestamp: 75,
                        proposal_id: "prop-0001", status: "applied" } as StreamEvent, 5);
    expect(state.proposals.size).toBe(0);
    expect(state.notices.at(-1)!.text).toContain("applied");
  });

  it("heartbeats only refresh stream time", () => {
    const state = emptyState();
    applyEvent(state, { event: "heartbeat", timestamp: 42 }, 0);
    expect(state.streamTime).toBe(42);
    expect(state.markers.size).toBe(0);
  });
});

describe("pruneOverlays", () => {
  it("removes overlays past their validity in stream time", () => {
    const state = emptyState();
    applyEvent(state, advisory("TrafficCongestion", "m-1", 200), 0);
    applyEvent(state, { event: "heartbeat", timestamp: 150 }, 0);
    pruneOverlays(state);
    expect(state.overlays.size).toBe(1);
    applyEvent(state, { event: "heartbeat", timestamp: 201 }, 0);
    pruneOverlays(state);
    expect(state.overlays.size).toBe(0);
  });
});

describe("deadReckon", () => {
  const marker = {
    vehicleId: "veh-1", tripId: "t", lat: 0, lon: 0, speedMs: 10,
    headingDeg: 90, timestamp: 0, receivedAtMs: 10_000,
  };

  it("advances along the heading by elapsed time", () => {
    const pos = deadReckon(marker, 11_000); // 1 s later, heading east
    expect(pos.lat).toBeCloseTo(0, 9);
    expect(pos.lon).toBeGreaterThan(0);
    const meters = pos.lon * 111_194.93;
    expect(meters).toBeCloseTo(10, 3);
  });

  it("caps extrapolation at two seconds", () => {
    const at3s = deadReckon(marker, 13_000);
    const at30s = deadReckon(marker, 40_000);
    expect(at30s.lon).toBe(at3s.lon);
    const meters = at30s.lon * 111_194.93;
    expect(meters).toBeCloseTo(20, 3);
  });

  it("holds still at zero speed", () => {
    const still = { ...marker, speedMs: 0 };
    expect(deadReckon(still, 60_000)).toEqual({ lat: 0, lon: 0 });
  });
});
