import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

interface Recorded {
  url: string;
  method: string;
  body: unknown;
  auth: string | undefined;
}

function recordingClient(status = 200, payload: unknown = {}) {
  const calls: Recorded[] = [];
  const fetchFn = (async (url: RequestInfo | URL, init?: RequestInit) => {
    const headers = (init?.headers ?? {}) as Record<string, string>;
    calls.push({
      url: String(url),
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
      auth: headers["Authorization"],
    });
    return new Response(JSON.stringify(payload), { status });
  }) as typeof fetch;
  const api = new ApiClient("http://server", fetchFn);
  return { api, calls };
}

describe("ApiClient", () => {
  it("maps each action to exactly one documented call", async () => {
    const { api, calls } = recordingClient(200, { token: "t", trips: [], proposals: [] });
    await api.login("manager", "pw");
    await api.graph();
    await api.trips();
    await api.trip("trip-0001");
    await api.eta("trip-0001");
    await api.startTrip("trip-0001");
    await api.proposals();
    await api.approveProposal("prop-0001");
    await api.declineProposal("prop-0001");
    expect(calls.map((c) => `${c.method} ${c.url.replace("http://server", "")}`)).toEqual([
      "POST /auth/login",
      "GET /network/graph",
      "GET /trips",
      "GET /trips/trip-0001",
      "GET /trips/trip-0001/eta",
      "POST /trips/trip-0001/start",
      "GET /proposals",
      "POST /proposals/prop-0001/approve",
      "POST /proposals/prop-0001/decline",
    ]);
  });

  it("carries the bearer token after login", async () => {
    const { api, calls } = recordingClient(200, { token: "secret-token" });
    await api.login("manager", "pw");
    await api.trips();
    expect(calls[0].auth).toBeUndefined();
    expect(calls[1].auth).toBe("Bearer secret-token");
  });

  it("sends the create-trip body verbatim", async () => {
    const { api, calls } = recordingClient(200, {});
    await api.createTrip({
      vehicle_id: "veh-0001",
      depart: { lat: 0, lon: 0 },
      stops: [{ location: "Harbor Gate", task_kind: "Delivery" }],
    });
    expect(calls[0].body).toEqual({
      vehicle_id: "veh-0001",
      depart: { lat: 0, lon: 0 },
      stops: [{ location: "Harbor Gate", task_kind: "Delivery" }],
    });
  });

  it("surfaces the server detail on errors", async () => {
    const { api } = recordingClient(422, { detail: "stop stop-1 is off-network" });
    await expect(api.trips()).rejects.toThrowError(ApiError);
    await expect(api.trips()).rejects.toMatchObject({
      status: 422,
      detail: "stop stop-1 is off-network",
    });
  });
});
