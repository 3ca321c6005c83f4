import { describe, expect, it } from "vitest";

import { curvePolylinePoints, formatFraction, renderDashboard } from "../src/dashboard.js";
import type { CurveRow, ProgressResponse, SlotsResponse } from "../src/types.js";

const curve: CurveRow[] = [
  { iteration: 0, labeled_fraction: 0.05, span_f1: 0.0, known_slots: 2, new_slots_discovered: 0 },
  { iteration: 1, labeled_fraction: 0.07, span_f1: 0.5, known_slots: 3, new_slots_discovered: 1 },
  { iteration: 2, labeled_fraction: 0.09, span_f1: 1.0, known_slots: 3, new_slots_discovered: 1 },
];

describe("curvePolylinePoints", () => {
  it("spans the x axis and maps F1 in [0,1] onto the y axis", () => {
    const points = curvePolylinePoints(curve, { width: 100, height: 50, pad: 10 });
    const coords = points.split(" ").map((p) => p.split(",").map(Number));
    expect(coords).toHaveLength(3);
    expect(coords[0][0]).toBe(10); // left edge
    expect(coords[2][0]).toBe(90); // right edge
    expect(coords[0][1]).toBe(40); // f1 0 -> bottom
    expect(coords[2][1]).toBe(10); // f1 1 -> top
    expect(coords[1][1]).toBe(25); // f1 0.5 -> middle
  });

  it("handles an empty or single-point curve", () => {
    expect(curvePolylinePoints([])).toBe("");
    expect(curvePolylinePoints(curve.slice(0, 1)).split(" ")).toHaveLength(1);
  });
});

describe("renderDashboard", () => {
  const progress: ProgressResponse = {
    schema: "v1",
    labeled_fraction: 0.0725,
    iteration: 3,
    known_slot_count: 7,
    batch_completion: 0.4,
    latest_span_f1: 0.612,
    phase: "collecting",
  };
  const slots: SlotsResponse = {
    schema: "v1",
    slots: [
      { name: "area", known: true, discovered_iteration: 0 },
      { name: "stars", known: true, discovered_iteration: 2 },
      { name: "parking", known: false, discovered_iteration: null },
    ],
    pending: [{ name: "roomtype", description: "" }],
  };

  it("renders every displayed number from a service response field", () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    renderDashboard(root, progress, curve, slots);
    const text = root.textContent!;
    expect(text).toContain(formatFraction(0.0725)); // labeled fraction
    expect(text).toContain("3"); // iteration
    expect(text).toContain("7"); // known slots
    expect(text).toContain("0.612"); // latest span F1, verbatim to 3 decimals
    expect(text).toContain("collecting");
  });

  it("lists slots with their discovery iteration and pending declarations", () => {
    const root = document.createElement("div");
    renderDashboard(root, progress, curve, slots);
    const items = Array.from(root.querySelectorAll(".slot-list li"), (li) => li.textContent);
    expect(items[0]).toBe("area — warm-up");
    expect(items[1]).toBe("stars — iteration 2");
    expect(items[2]).toBe("parking — not discovered yet");
    expect(items[3]).toContain("roomtype — declared");
  });

  it("draws the curve as one polyline", () => {
    const root = document.createElement("div");
    renderDashboard(root, progress, curve, slots);
    const polyline = root.querySelector("polyline");
    expect(polyline?.getAttribute("points")).toBe(curvePolylinePoints(curve));
  });
});
