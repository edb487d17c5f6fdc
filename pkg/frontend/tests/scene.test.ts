import { describe, expect, it } from "vitest";

import { fitProjection } from "../src/projection.js";
import { buildScene } from "../src/scene.js";
import { applyEvent, emptyState } from "../src/state.js";
import type { GraphDoc, StreamEvent, TripDoc } from "../src/types.js";

const U = 0.008993216059187306; // one kilometer in degrees at the equator

const graph: GraphDoc = {
  nodes: [
    { id: "A", lat: 0, lon: 0 },
    { id: "B", lat: 0, lon: U },
    { id: "E", lat: -U, lon: U },
  ],
  edges: [
    { id: "e1", from: "A", to: "B", length_m: 1000, free_flow_speed_ms: 15,
      current_speed_ms: 15 },
    { id: "e7", from: "B", to: "E", length_m: 1000, free_flow_speed_ms: 10,
      current_speed_ms: 3 },
  ],
};

const trip: TripDoc = {
  trip_id: "trip-0001", vehicle_id: "veh-0001", driver_id: "drv-0001",
  state: "Active", reroute_count: 0, edge_ids: ["e1", "e7"],
  total_length_m: 2000, total_time_s: 166, stops: [],
};

describe("projection", () => {
  it("fits the network with north up and preserves aspect", () => {
    const proj = fitProjection(graph, 900, 560, 40);
    const a = proj.toXY(0, 0);
    const b = proj.toXY(0, U);
    const e = proj.toXY(-U, U);
    expect(b.x).toBeGreaterThan(a.x); // east grows right
    expect(e.y).toBeGreaterThan(b.y); // south grows down
    // both spans are 1000 m, so pixel spans match
    expect(Math.abs((b.x - a.x) - (e.y - b.y))).toBeLessThan(0.5);
    expect(proj.metersToPx(1000)).toBeCloseTo(b.x - a.x, 3);
  });
});

describe("buildScene", () => {
  it("marks congested edges by slowdown ratio", () => {
    const proj = fitProjection(graph, 900, 560);
    const scene = buildScene(emptyState(), graph, proj, 0);
    const byId = new Map(scene.edges.map((e) => [e.id, e]));
    expect(byId.get("e1")!.slowdown).toBeCloseTo(0);
    expect(byId.get("e7")!.slowdown).toBeCloseTo(0.7);
  });

  it("places vehicles, advisory circles, and the selected route", () => {
    const proj = fitProjection(graph, 900, 560);
    const state = emptyState();
    applyEvent(state, { event: "position", vehicle_id: "veh-0001",
                        trip_id: "trip-0001", lat: 0, lon: U / 2, speed_ms: 0,
                        heading_deg: 90, timestamp: 5 } as StreamEvent, 0);
    applyEvent(state, {
      event: "advisory", msg_type: "IVIM", timestamp: 6,
      message: { kind: "TrafficCongestion", msg_id: "m-1", valid_to: 900 },
      zone: { lat: -U / 2, lon: U, radius_m: 500 }, delivered: 1,
    } as StreamEvent, 0);
    state.trips.set(trip.trip_id, trip);
    state.selectedTrip = trip.trip_id;

    const scene = buildScene(state, graph, proj, 0);
    expect(scene.vehicles).toHaveLength(1);
    const mid = proj.toXY(0, U / 2);
    expect(scene.vehicles[0].x).toBeCloseTo(mid.x, 3);
    expect(scene.circles).toHaveLength(1);
    expect(scene.circles[0].kind).toBe("TrafficCongestion");
    expect(scene.circles[0].rPx).toBeCloseTo(proj.metersToPx(500), 6);
    expect(scene.routes).toHaveLength(1);
    expect(scene.routes[0].points).toHaveLength(3); // A -> B -> E
  });

  it("previews the proposal polyline next to the current route", () => {
    const proj = fitProjection(graph, 900, 560);
    const state = emptyState();
    state.trips.set(trip.trip_id, trip);
    state.selectedTrip = trip.trip_id;
    applyEvent(state, {
      event: "proposal", timestamp: 70, proposal_id: "prop-0001",
      trip_id: "trip-0001", created_at: 70, expires_at: 190,
      edge_ids: ["e1"], old_remaining_s: 300, new_total_s: 100, saving_s: 200,
    } as unknown as StreamEvent, 0);
    const scene = buildScene(state, graph, proj, 0);
    const roles = scene.routes.map((r) => r.role).sort();
    expect(roles).toEqual(["proposal", "route"]);
  });
});
