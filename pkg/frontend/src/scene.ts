// Pure scene construction: ViewState + graph -> drawable primitives.
// Keeping this free of DOM makes the whole render path testable headlessly.

import type { Projection } from "./projection.js";
import { deadReckon, ViewState } from "./state.js";
import type { GraphDoc, ProposalDoc } from "./types.js";

export interface EdgeLine {
  id: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  slowdown: number; // 0 free flowing .. 1 fully congested
}

export interface VehicleDot {
  id: string;
  tripId: string;
  x: number;
  y: number;
  headingDeg: number;
  speedMs: number;
}

export interface AdvisoryCircle {
  key: string;
  kind: string;
  x: number;
  y: number;
  rPx: number;
}

export interface Polyline {
  points: Array<{ x: number; y: number }>;
  role: "route" | "proposal";
}

export interface Scene {
  edges: EdgeLine[];
  vehicles: VehicleDot[];
  circles: AdvisoryCircle[];
  routes: Polyline[];
}

function edgeChainPoints(graph: GraphDoc, edgeIds: string[], proj: Projection) {
  const nodeById = new Map(graph.nodes.map((n) => [n.id, n]));
  const edgeById = new Map(graph.edges.map((e) => [e.id, e]));
  const points: Array<{ x: number; y: number }> = [];
  for (const [i, edgeId] of edgeIds.entries()) {
    const edge = edgeById.get(edgeId);
    if (!edge) continue;
    const from = nodeById.get(edge.from)!;
    const to = nodeById.get(edge.to)!;
    if (i === 0) points.push(proj.toXY(from.lat, from.lon));
    points.push(proj.toXY(to.lat, to.lon));
  }
  return points;
}

export function buildScene(state: ViewState, graph: GraphDoc, proj: Projection,
                           wallNowMs: number): Scene {
  const nodeById = new Map(graph.nodes.map((n) => [n.id, n]));

  const edges: EdgeLine[] = graph.edges.map((e) => {
    const a = nodeById.get(e.from)!;
    const b = nodeById.get(e.to)!;
    const p1 = proj.toXY(a.lat, a.lon);
    const p2 = proj.toXY(b.lat, b.lon);
    return {
      id: e.id,
      x1: p1.x,
      y1: p1.y,
      x2: p2.x,
      y2: p2.y,
      slowdown: 1 - e.current_speed_ms / e.free_flow_speed_ms,
    };
  });

  const vehicles: VehicleDot[] = [...state.markers.values()].map((m) => {
    const pos = deadReckon(m, wallNowMs);
    const { x, y } = proj.toXY(pos.lat, pos.lon);
    return { id: m.vehicleId, tripId: m.tripId, x, y,
             headingDeg: m.headingDeg, speedMs: m.speedMs };
  });

  const circles: AdvisoryCircle[] = [...state.overlays.values()].map((o) => {
    const { x, y } = proj.toXY(o.lat, o.lon);
    return { key: o.key, kind: o.kind, x, y, rPx: proj.metersToPx(o.radiusM) };
  });

  const routes: Polyline[] = [];
  if (state.selectedTrip) {
    const trip = state.trips.get(state.selectedTrip);
    if (trip) {
      routes.push({ points: edgeChainPoints(graph, trip.edge_ids, proj), role: "route" });
      const proposal = [...state.proposals.values()]
        .find((p: ProposalDoc) => p.trip_id === trip.trip_id);
      if (proposal) {
        routes.push({ points: edgeChainPoints(graph, proposal.edge_ids, proj),
                      role: "proposal" });
      }
    }
  }

  return { edges, vehicles, circles, routes };
}
