/** Run dashboard: progress gauge, slot inventory, learning-curve chart.
 *
 * Everything rendered here is a service response field; the client computes
 * no metrics of its own (the curve path is pure geometry).
 */

import type { CurveRow, ProgressResponse, SlotsResponse } from "./types.js";

export interface ChartGeometry {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_CHART: ChartGeometry = { width: 420, height: 140, pad: 12 };

/** SVG polyline points for span-F1 over labeled fraction; F1 axis is [0, 1]. */
export function curvePolylinePoints(rows: CurveRow[], geometry: ChartGeometry = DEFAULT_CHART): string {
  if (rows.length === 0) return "";
  const { width, height, pad } = geometry;
  const xs = rows.map((r) => r.labeled_fraction);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const span = xMax - xMin || 1;
  return rows
    .map((r) => {
      const x = pad + ((r.labeled_fraction - xMin) / span) * (width - 2 * pad);
      const y = height - pad - r.span_f1 * (height - 2 * pad);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

export function formatFraction(x: number): string {
  return `${(x * 100).toFixed(1)}%`;
}

export function renderDashboard(
  root: HTMLElement,
  progress: ProgressResponse,
  curve: CurveRow[],
  slots: SlotsResponse,
): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  const gauges = doc.createElement("div");
  gauges.className = "gauges";
  const entries: [string, string][] = [
    ["labeled", formatFraction(progress.labeled_fraction)],
    ["iteration", String(progress.iteration)],
    ["known slots", String(progress.known_slot_count)],
    ["batch done", formatFraction(progress.batch_completion)],
    ["span-F1", progress.latest_span_f1.toFixed(3)],
    ["phase", progress.phase],
  ];
  for (const [label, value] of entries) {
    const gauge = doc.createElement("div");
    gauge.className = "gauge";
    const v = doc.createElement("strong");
    v.textContent = value;
    const l = doc.createElement("small");
    l.textContent = label;
    gauge.append(v, l);
    gauges.appendChild(gauge);
  }
  root.appendChild(gauges);

  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${DEFAULT_CHART.width} ${DEFAULT_CHART.height}`);
  svg.setAttribute("class", "curve-chart");
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", "span-F1 learning curve");
  const line = doc.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", curvePolylinePoints(curve));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  line.setAttribute("stroke-width", "2");
  svg.appendChild(line);
  root.appendChild(svg);

  const list = doc.createElement("ul");
  list.className = "slot-list";
  for (const slot of slots.slots) {
    const item = doc.createElement("li");
    item.className = slot.known ? "known" : "unknown";
    const when =
      slot.discovered_iteration === null
        ? "not discovered yet"
        : slot.discovered_iteration === 0
          ? "warm-up"
          : `iteration ${slot.discovered_iteration}`;
    item.textContent = `${slot.name} — ${when}`;
    list.appendChild(item);
  }
  for (const pending of slots.pending) {
    const item = doc.createElement("li");
    item.className = "pending";
    item.textContent = `${pending.name} — declared, awaiting batch completion`;
    list.appendChild(item);
  }
  root.appendChild(list);
}
