// Fit the road graph's bounding box into the SVG viewport. Plain
// equirectangular: fine for desk-scale networks.

import type { GraphDoc } from "./types.js";

export interface Projection {
  toXY(lat: number, lon: number): { x: number; y: number };
  metersToPx(m: number): number;
  width: number;
  height: number;
}

export function fitProjection(graph: GraphDoc, width: number, height: number,
                              padding = 40): Projection {
  const lats = graph.nodes.map((n) => n.lat);
  const lons = graph.nodes.map((n) => n.lon);
  const latMin = Math.min(...lats);
  const latMax = Math.max(...lats);
  const lonMin = Math.min(...lons);
  const lonMax = Math.max(...lons);
  const midLat = (latMin + latMax) / 2;
  const mPerDeg = 111_194.93;
  const cosLat = Math.cos((midLat * Math.PI) / 180);

  const spanX = Math.max((lonMax - lonMin) * mPerDeg * cosLat, 1);
  const spanY = Math.max((latMax - latMin) * mPerDeg, 1);
  const scale = Math.min((width - 2 * padding) / spanX, (height - 2 * padding) / spanY);

  return {
    width,
    height,
    toXY(lat: number, lon: number) {
      const x = padding + (lon - lonMin) * mPerDeg * cosLat * scale;
      const y = padding + (latMax - lat) * mPerDeg * scale; // north is up
      return { x, y };
    },
    metersToPx(m: number) {
      return m * scale;
    },
  };
}
