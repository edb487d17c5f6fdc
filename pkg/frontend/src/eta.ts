// ETA table rows for the selected trip.

import { ApiClient } from "./api.js";
import type { TripDoc } from "./types.js";

export interface EtaTableRow {
  stopId: string;
  kind: string;
  status: string;
  etaSeconds: number; // seconds from now (stream clock)
  etaAt: number;
}

export async function etaRows(api: ApiClient, trip: TripDoc): Promise<EtaTableRow[]> {
  if (trip.state !== "Active" && trip.state !== "Planned") return [];
  const doc = await api.eta(trip.trip_id);
  const byId = new Map(trip.stops.map((s) => [s.stop_id, s]));
  return doc.etas.map((row) => {
    const stop = byId.get(row.stop_id);
    return {
      stopId: row.stop_id,
      kind: stop?.task_kind ?? "?",
      status: stop?.status ?? "?",
      etaSeconds: row.eta - doc.now,
      etaAt: row.eta,
    };
  });
}

export function formatEta(seconds: number): string {
  if (!isFinite(seconds)) return "-";
  const s = Math.max(0, Math.round(seconds));
  const m = Math.floor(s / 60);
  return m > 0 ? `${m}m ${s % 60}s` : `${s}s`;
}
