// Destination entry: parse form rows, submit one create-trip call, and map
// server validation errors back onto the offending stop.

import { ApiClient, ApiError, StopSpec, TripCreate } from "./api.js";
import type { TripDoc } from "./types.js";

export interface StopRow {
  location: string; // address or "lat,lon"
  kind: string; // Pickup | Delivery | Maintenance
}

export interface SubmitResult {
  trip: TripDoc | null;
  formError: string | null;
  stopErrors: Array<string | null>;
}

export function parseLocation(text: string): string | { lat: number; lon: number } {
  const trimmed = text.trim();
  const match = trimmed.match(/^(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)$/);
  if (match) return { lat: parseFloat(match[1]), lon: parseFloat(match[2]) };
  return trimmed;
}

export function buildTripRequest(vehicleId: string, depart: string,
                                 rows: StopRow[]): TripCreate {
  const stops: StopSpec[] = rows.map((row) => ({
    location: parseLocation(row.location),
    task_kind: row.kind || "Delivery",
  }));
  return { vehicle_id: vehicleId, depart: parseLocation(depart), stops };
}

/** Attribute a 422 detail to the stop it names; stop ids are assigned in
 * submission order (stop-1, stop-2, ...), and address errors quote the text. */
export function attributeError(detail: string, rows: StopRow[]): SubmitResult {
  const stopErrors: Array<string | null> = rows.map(() => null);
  const idMatch = detail.match(/stop stop-(\d+)/);
  if (idMatch) {
    const index = parseInt(idMatch[1], 10) - 1;
    if (index >= 0 && index < rows.length) {
      stopErrors[index] = detail;
      return { trip: null, formError: null, stopErrors };
    }
  }
  for (const [i, row] of rows.entries()) {
    if (detail.includes(`'${row.location.trim()}'`)) {
      stopErrors[i] = detail;
      return { trip: null, formError: null, stopErrors };
    }
  }
  return { trip: null, formError: detail, stopErrors };
}

export async function submitTrip(api: ApiClient, vehicleId: string, depart: string,
                                 rows: StopRow[]): Promise<SubmitResult> {
  try {
    const trip = await api.createTrip(buildTripRequest(vehicleId, depart, rows));
    return { trip, formError: null, stopErrors: rows.map(() => null) };
  } catch (error) {
    if (error instanceof ApiError && error.status === 422) {
      return attributeError(error.detail, rows);
    }
    throw error;
  }
}
