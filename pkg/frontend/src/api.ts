// Thin typed client: every user action in the UI funnels through exactly one
// method here, and every method is exactly one documented endpoint.

import type { EtaDoc, GraphDoc, ProposalDoc, TripDoc } from "./types.js";

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

export interface StopSpec {
  location: string | { lat: number; lon: number };
  task_kind: string;
}

export interface TripCreate {
  vehicle_id: string;
  depart: string | { lat: number; lon: number };
  stops: StopSpec[];
}

type FetchLike = typeof fetch;

export class ApiClient {
  base: string;
  token: string | null = null;
  private fetchFn: FetchLike;

  constructor(base: string, fetchFn: FetchLike = fetch) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const doc = await response.json();
        if (doc && typeof doc.detail === "string") detail = doc.detail;
        else detail = JSON.stringify(doc);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async login(userId: string, credential: string): Promise<string> {
    const doc = await this.request<{ token: string }>("POST", "/auth/login", {
      user_id: userId,
      credential,
    });
    this.token = doc.token;
    return doc.token;
  }

  graph(): Promise<GraphDoc> {
    return this.request("GET", "/network/graph");
  }

  trips(): Promise<{ trips: TripDoc[] }> {
    return this.request("GET", "/trips");
  }

  trip(tripId: string): Promise<TripDoc> {
    return this.request("GET", `/trips/${tripId}`);
  }

  eta(tripId: string): Promise<EtaDoc> {
    return this.request("GET", `/trips/${tripId}/eta`);
  }

  createTrip(body: TripCreate): Promise<TripDoc> {
    return this.request("POST", "/trips", body);
  }

  startTrip(tripId: string): Promise<TripDoc> {
    return this.request("POST", `/trips/${tripId}/start`);
  }

  proposals(): Promise<{ proposals: ProposalDoc[] }> {
    return this.request("GET", "/proposals");
  }

  approveProposal(proposalId: string): Promise<TripDoc> {
    return this.request("POST", `/proposals/${proposalId}/approve`);
  }

  declineProposal(proposalId: string): Promise<{ proposal_id: string }> {
    return this.request("POST", `/proposals/${proposalId}/decline`);
  }
}
