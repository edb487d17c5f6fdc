// Boot: login, pull graph + trips, open the stream, paint on every change.

import { ApiClient, ApiError } from "./api.js";
import { paintEtaTable, paintProposals, paintScene } from "./dom.js";
import { etaRows } from "./eta.js";
import { submitTrip, StopRow } from "./form.js";
import { fitProjection, Projection } from "./projection.js";
import { buildScene } from "./scene.js";
import { applyEvent, emptyState, pruneOverlays, ViewState } from "./state.js";
import { NdjsonStream } from "./stream.js";
import type { GraphDoc } from "./types.js";

const base = window.location.origin;
const api = new ApiClient(base);
const state: ViewState = emptyState();
let graph: GraphDoc | null = null;
let projection: Projection | null = null;
let stream: NdjsonStream | null = null;

const $ = (id: string) => document.getElementById(id)!;

function repaint(): void {
  if (!graph || !projection) return;
  pruneOverlays(state);
  const scene = buildScene(state, graph, projection, Date.now());
  paintScene($("map") as unknown as SVGSVGElement, scene, selectTrip);
  paintProposals($("proposals"), [...state.proposals.values()], {
    approve: (id) =>
      api.approveProposal(id).then((trip) => {
        state.trips.set(trip.trip_id, trip);
        state.proposals.delete(id);
        void refreshEta();
        repaint();
      }).catch(showActionError),
    decline: (id) =>
      api.declineProposal(id).then(() => {
        state.proposals.delete(id);
        repaint();
      }).catch(showActionError),
  });
  const notices = state.notices.slice(-3).map((n) => n.text).join(" | ");
  $("notices").textContent = notices;
}

function showActionError(error: unknown): void {
  if (error instanceof ApiError && error.status === 404) {
    // proposal expired server-side: clear it and say so
    state.notices.push({ text: "proposal expired on the server", atMs: Date.now() });
    void api.proposals().then((doc) => {
      state.proposals = new Map(doc.proposals.map((p) => [p.proposal_id, p]));
      repaint();
    });
    return;
  }
  $("notices").textContent = String(error);
}

function selectTrip(tripId: string): void {
  state.selectedTrip = tripId;
  $("selected-trip").textContent = tripId;
  void refreshEta();
  repaint();
}

async function refreshEta(): Promise<void> {
  if (!state.selectedTrip) return;
  try {
    const trip = state.trips.get(state.selectedTrip) ?? (await api.trip(state.selectedTrip));
    state.trips.set(trip.trip_id, trip);
    paintEtaTable($("eta-body"), await etaRows(api, trip));
  } catch {
    paintEtaTable($("eta-body"), []);
  }
}

function wireForm(): void {
  const form = $("trip-form") as HTMLFormElement;
  $("add-stop").addEventListener("click", () => addStopRow());
  addStopRow();
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const rows = stopRows();
    const vehicleId = ($("form-vehicle") as HTMLInputElement).value.trim();
    const depart = ($("form-depart") as HTMLInputElement).value.trim();
    void submitTrip(api, vehicleId, depart, rows).then((result) => {
      const rowNodes = [...form.querySelectorAll<HTMLElement>(".stop-row")];
      rowNodes.forEach((node, i) => {
        const slot = node.querySelector<HTMLElement>(".stop-error")!;
        slot.textContent = result.stopErrors[i] ?? "";
      });
      $("form-error").textContent = result.formError ?? "";
      if (result.trip) {
        state.trips.set(result.trip.trip_id, result.trip);
        state.notices.push({ text: `created ${result.trip.trip_id}`, atMs: Date.now() });
        selectTrip(result.trip.trip_id);
      }
    }).catch((error) => {
      $("form-error").textContent = String(error);
    });
  });
}

function addStopRow(): void {
  const container = $("stops");
  const row = document.createElement("div");
  row.className = "stop-row";
  row.innerHTML =
    `<input class="stop-location" placeholder="address or lat,lon">` +
    `<select class="stop-kind"><option>Delivery</option><option>Pickup</option>` +
    `<option>Maintenance</option></select><span class="stop-error"></span>`;
  container.appendChild(row);
}

function stopRows(): StopRow[] {
  return [...document.querySelectorAll<HTMLElement>(".stop-row")].map((node) => ({
    location: node.querySelector<HTMLInputElement>(".stop-location")!.value,
    kind: node.querySelector<HTMLSelectElement>(".stop-kind")!.value,
  }));
}

async function start(userId: string, credential: string): Promise<void> {
  await api.login(userId, credential);
  graph = await api.graph();
  projection = fitProjection(graph, 900, 560);
  const trips = await api.trips();
  for (const trip of trips.trips) state.trips.set(trip.trip_id, trip);
  const pending = await api.proposals();
  state.proposals = new Map(pending.proposals.map((p) => [p.proposal_id, p]));
  const first = trips.trips.find((t) => t.state === "Active") ?? trips.trips[0];
  if (first) selectTrip(first.trip_id);

  stream = new NdjsonStream(`${base}/stream`, api.token!, {
    onEvent: (event) => {
      applyEvent(state, event, Date.now());
      if (event.event !== "heartbeat") repaint();
      if (event.event === "trip" || event.event === "proposal_resolved") void refreshEta();
    },
    onStale: (stale) => {
      state.stale = stale;
      $("stale-badge").classList.toggle("visible", stale);
    },
  });
  stream.start();
  setInterval(repaint, 500); // dead reckoning between events
  setInterval(() => void refreshEta(), 2000);
  $("login-panel").classList.add("hidden");
  $("dashboard").classList.remove("hidden");
}

function wireLogin(): void {
  const form = $("login-form") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const user = ($("login-user") as HTMLInputElement).value.trim();
    const credential = ($("login-pass") as HTMLInputElement).value;
    start(user, credential).catch((error) => {
      $("login-error").textContent = String(error);
    });
  });
}

wireLogin();
wireForm();
