/** Choropleth coloring and SVG polygon rendering.
 *
 * Colors are a monotone function of the value: each value maps to a
 * position t in [0, 1] by linear normalization over the payload range, then
 * into a sequential ramp, or a diverging one when a temperature payload
 * spans zero. Regions with null values are hatched grey.
 */
import type { FeatureCollection, MapPayload } from "./types.js";

export interface ColorScale {
  kind: "sequential" | "diverging";
  t(value: number): number;
  color(value: number): string;
  min: number;
  max: number;
}

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

function rgb(stops: [number, number, number][], t: number): string {
  const n = stops.length - 1;
  const scaled = Math.min(Math.max(t, 0), 1) * n;
  const i = Math.min(Math.floor(scaled), n - 1);
  const f = scaled - i;
  const channel = (c: number) => Math.round(lerp(stops[i][c], stops[i + 1][c], f));
  return `rgb(${channel(0)},${channel(1)},${channel(2)})`;
}

const SEQUENTIAL: [number, number, number][] = [
  [255, 245, 235], [253, 141, 60], [127, 39, 4],
];
const DIVERGING: [number, number, number][] = [
  [33, 102, 172], [247, 247, 247], [178, 24, 43],
];

export const MISSING_FILL = "url(#missing-hatch)";

export function buildColorScale(
  values: (number | null)[], variable: string,
): ColorScale | null {
  const present = values.filter((v): v is number => v !== null);
  if (present.length === 0) return null;
  const min = Math.min(...present);
  const max = Math.max(...present);
  const span = max - min || 1;
  const diverging = variable === "temperature" && min < 0 && max > 0;
  const t = (value: number) => {
    if (!diverging) return (value - min) / span;
    const reach = Math.max(Math.abs(min), Math.abs(max)) || 1;
    return (value / reach + 1) / 2;
  };
  const stops = diverging ? DIVERGING : SEQUENTIAL;
  return {
    kind: diverging ? "diverging" : "sequential",
    t,
    color: (value: number) => rgb(stops, t(value)),
    min,
    max,
  };
}

interface Projection {
  x(lon: number): number;
  y(lat: number): number;
}

function fitProjection(fc: FeatureCollection, width: number, height: number,
                       pad: number): Projection {
  let lonMin = Infinity, lonMax = -Infinity, latMin = Infinity, latMax = -Infinity;
  for (const feature of fc.features) {
    const polys = feature.geometry.type === "Polygon"
      ? [feature.geometry.coordinates as number[][][]]
      : (feature.geometry.coordinates as number[][][][]);
    for (const poly of polys) {
      for (const ring of poly) {
        for (const [lon, lat] of ring) {
          lonMin = Math.min(lonMin, lon); lonMax = Math.max(lonMax, lon);
          latMin = Math.min(latMin, lat); latMax = Math.max(latMax, lat);
        }
      }
    }
  }
  const sx = (width - 2 * pad) / (lonMax - lonMin || 1);
  const sy = (height - 2 * pad) / (latMax - latMin || 1);
  const s = Math.min(sx, sy);
  return {
    x: (lon) => pad + (lon - lonMin) * s,
    y: (lat) => height - pad - (lat - latMin) * s,
  };
}

function featurePath(feature: FeatureCollection["features"][number],
                     proj: Projection): string {
  const polys = feature.geometry.type === "Polygon"
    ? [feature.geometry.coordinates as number[][][]]
    : (feature.geometry.coordinates as number[][][][]);
  const parts: string[] = [];
  for (const poly of polys) {
    for (const ring of poly) {
      const d = ring.map(([lon, lat], i) =>
        `${i === 0 ? "M" : "L"}${proj.x(lon).toFixed(2)},${proj.y(lat).toFixed(2)}`);
      parts.push(d.join("") + "Z");
    }
  }
  return parts.join(" ");
}

export interface ChoroplethModel {
  fills: Map<string, string>;
  scale: ColorScale | null;
}

export function buildChoroplethModel(
  payload: MapPayload, variable: string,
): ChoroplethModel {
  const scale = buildColorScale(Object.values(payload), variable);
  const fills = new Map<string, string>();
  for (const [regionId, value] of Object.entries(payload)) {
    fills.set(regionId,
              value === null || scale === null ? MISSING_FILL : scale.color(value));
  }
  return { fills, scale };
}

export function renderChoroplethSvg(
  fc: FeatureCollection, payload: MapPayload, variable: string,
  width = 720, height = 420,
): string {
  const proj = fitProjection(fc, width, height, 16);
  const model = buildChoroplethModel(payload, variable);
  const shapes = fc.features.map((feature) => {
    const id = feature.properties.region_id;
    const fill = model.fills.get(id) ?? MISSING_FILL;
    return `<path d="${featurePath(feature, proj)}" fill="${fill}" ` +
      `stroke="#333" stroke-width="0.6" data-region="${id}"><title>${id}</title></path>`;
  });
  const legend = model.scale === null ? "" :
    `<text x="16" y="${height - 4}" class="axis">min ${model.scale.min}</text>` +
    `<text x="${width - 16}" y="${height - 4}" class="axis" text-anchor="end">` +
    `max ${model.scale.max}</text>`;
  return `<svg viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">` +
    `<defs><pattern id="missing-hatch" width="6" height="6" patternUnits="userSpaceOnUse">` +
    `<rect width="6" height="6" fill="#e8e8e8"/>` +
    `<path d="M0,6 L6,0" stroke="#b0b0b0" stroke-width="1"/></pattern></defs>` +
    `${shapes.join("")}${legend}</svg>`;
}
