// SVG painting and panel DOM. Thin by design: all decisions were made while
// building the Scene, this file only draws it.

import type { Scene } from "./scene.js";
import type { ProposalDoc } from "./types.js";
import type { EtaTableRow } from "./eta.js";
import { formatEta } from "./eta.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const KIND_CLASS: Record<string, string> = {
  TrafficCongestion: "advisory-congestion",
  SpeedAdvisory: "advisory-speed",
  RerouteAdvisory: "advisory-reroute",
  VmsFreeText: "advisory-vms",
  StaticSign: "advisory-sign",
};

function el(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

export function paintScene(svg: SVGSVGElement, scene: Scene,
                           onSelectTrip: (tripId: string) => void): void {
  svg.replaceChildren();
  for (const edge of scene.edges) {
    const line = el("line", {
      x1: `${edge.x1}`, y1: `${edge.y1}`, x2: `${edge.x2}`, y2: `${edge.y2}`,
      class: edge.slowdown > 0.5 ? "edge edge-slow" : "edge",
    });
    svg.appendChild(line);
  }
  for (const circle of scene.circles) {
    svg.appendChild(el("circle", {
      cx: `${circle.x}`, cy: `${circle.y}`, r: `${Math.max(circle.rPx, 4)}`,
      class: `advisory ${KIND_CLASS[circle.kind] ?? "advisory-hazard"}`,
      "data-kind": circle.kind,
    }));
  }
  for (const route of scene.routes) {
    const points = route.points.map((p) => `${p.x},${p.y}`).join(" ");
    svg.appendChild(el("polyline", {
      points,
      class: route.role === "route" ? "route-current" : "route-proposal",
      fill: "none",
    }));
  }
  for (const vehicle of scene.vehicles) {
    const group = el("g", {
      class: "vehicle",
      transform: `translate(${vehicle.x}, ${vehicle.y}) rotate(${vehicle.headingDeg})`,
      "data-vehicle": vehicle.id,
    });
    group.appendChild(el("polygon", { points: "0,-7 5,7 -5,7", class: "vehicle-arrow" }));
    group.addEventListener("click", () => onSelectTrip(vehicle.tripId));
    svg.appendChild(group);
    const label = el("text", { x: `${vehicle.x + 8}`, y: `${vehicle.y - 8}`,
                               class: "vehicle-label" });
    label.textContent = vehicle.id.replace("veh-", "v");
    svg.appendChild(label);
  }
}

export function paintEtaTable(tbody: HTMLElement, rows: EtaTableRow[]): void {
  tbody.replaceChildren();
  for (const row of rows) {
    const tr = document.createElement("tr");
    tr.innerHTML = `<td>${row.stopId}</td><td>${row.kind}</td>` +
      `<td>${row.status}</td><td>${formatEta(row.etaSeconds)}</td>`;
    tbody.appendChild(tr);
  }
}

export function paintProposals(
  container: HTMLElement,
  proposals: ProposalDoc[],
  actions: { approve: (id: string) => void; decline: (id: string) => void },
): void {
  container.replaceChildren();
  if (!proposals.length) {
    container.innerHTML = `<p class="muted">no pending proposals</p>`;
    return;
  }
  for (const p of proposals) {
    const card = document.createElement("div");
    card.className = "proposal-card";
    card.dataset.proposal = p.proposal_id;
    const delta = formatEta(p.saving_s);
    card.innerHTML =
      `<strong>${p.trip_id}</strong> save ${delta} ` +
      `<span class="muted">(${formatEta(p.old_remaining_s)} -> ${formatEta(p.new_total_s)})</span> `;
    const approve = document.createElement("button");
    approve.textContent = "approve";
    approve.addEventListener("click", () => actions.approve(p.proposal_id));
    const decline = document.createElement("button");
    decline.textContent = "decline";
    decline.addEventListener("click", () => actions.decline(p.proposal_id));
    card.append(approve, decline);
    container.appendChild(card);
  }
}
