import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { beforeEach, describe, expect, it } from "vitest";

import { canonicalScenario } from "../src/canonical.js";
import { Scenario, parseScenario } from "../src/model.js";
import {
  EditorState,
  UNDO_DEPTH,
  UndoHistory,
  createState,
  dragWaypoint,
  markRejected,
  markSaved,
  select,
} from "../src/state.js";
import { fitView, screenToWorld, worldToScreen, zoomAt } from "../src/view.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixtureBytes = readFileSync(join(here, "fixtures", "scenario.json"), "utf-8");

function freshState(): EditorState {
  return createState(parseScenario(fixtureBytes));
}

function countDifferingPairs(a: Scenario, b: Scenario): number {
  let count = 0;
  for (let i = 0; i < a.vehicles.length; i++) {
    for (const segment of ["lead_in", "waypoints"] as const) {
      const pa = a.vehicles[i][segment];
      const pb = b.vehicles[i][segment];
      for (let j = 0; j < pa.length; j++) {
        if (pa[j][0] !== pb[j][0] || pa[j][1] !== pb[j][1]) count++;
      }
    }
  }
  return count;
}

describe("dragWaypoint", () => {
  let state: EditorState;
  beforeEach(() => {
    state = freshState();
  });

  it("moves exactly one coordinate pair", () => {
    const sel = { vehicleId: 1, segment: "waypoints" as const, index: 3 };
    const next = dragWaypoint(state, sel, [25.0, 1.5], "free");
    expect(countDifferingPairs(state.scenario, next.scenario)).toBe(1);
    expect(next.scenario.vehicles[1].waypoints[3]).toEqual([25.0, 1.5]);
    expect(next.dirty).toBe(true);
    // every other byte of the canonical form is identical
    const before = canonicalScenario(state.scenario).split(",");
    const after = canonicalScenario(next.scenario).split(",");
    expect(after.length).toBe(before.length);
    const changed = after.filter((tok, i) => tok !== before[i]);
    expect(changed.length).toBeLessThanOrEqual(2); // the x and y tokens
  });

  it("zero displacement changes selection only", () => {
    const sel = { vehicleId: 1, segment: "waypoints" as const, index: 0 };
    const target = state.scenario.vehicles[1].waypoints[0];
    const next = dragWaypoint(state, sel, [target[0], target[1]], "free");
    expect(canonicalScenario(next.scenario)).toBe(canonicalScenario(state.scenario));
    expect(next.selection).toEqual(sel);
    expect(next.dirty).toBe(false);
  });

  it("lateral lock on a straight +x road moves only y", () => {
    const sel = { vehicleId: 1, segment: "waypoints" as const, index: 2 };
    const start = state.scenario.vehicles[1].waypoints[2];
    const next = dragWaypoint(state, sel, [start[0] + 7.0, start[1] + 2.0], "lateral");
    const moved = next.scenario.vehicles[1].waypoints[2];
    expect(moved[0]).toBeCloseTo(start[0], 12);
    expect(moved[1]).toBeCloseTo(start[1] + 2.0, 12);
  });

  it("longitudinal lock on a straight +x road moves only x", () => {
    const sel = { vehicleId: 1, segment: "waypoints" as const, index: 2 };
    const start = state.scenario.vehicles[1].waypoints[2];
    const next = dragWaypoint(state, sel, [start[0] + 7.0, start[1] + 2.0], "longitudinal");
    const moved = next.scenario.vehicles[1].waypoints[2];
    expect(moved[0]).toBeCloseTo(start[0] + 7.0, 12);
    expect(moved[1]).toBeCloseTo(start[1], 12);
  });

  it("flags off-road drags without blocking them", () => {
    const sel = { vehicleId: 1, segment: "waypoints" as const, index: 0 };
    const next = dragWaypoint(state, sel, [20.0, 30.0], "free");
    expect(next.offRoad).toBe(true);
    expect(next.scenario.vehicles[1].waypoints[0]).toEqual([20.0, 30.0]);
    const back = dragWaypoint(next, sel, [20.0, 0.5], "free");
    expect(back.offRoad).toBe(false);
  });

  it("does not mutate the input state", () => {
    const before = canonicalScenario(state.scenario);
    dragWaypoint(state, { vehicleId: 1, segment: "waypoints", index: 1 },
                 [999.0, 999.0], "free");
    expect(canonicalScenario(state.scenario)).toBe(before);
  });
});

describe("undo history", () => {
  it("restores the exact prior state", () => {
    const history = new UndoHistory();
    const state = freshState();
    history.push(state);
    const edited = dragWaypoint(state, { vehicleId: 1, segment: "waypoints", index: 0 },
                                [21.0, 0.5], "free");
    const restored = history.undo();
    expect(restored).toEqual(state);
    expect(restored).not.toBe(state); // deep copy, not aliasing
    expect(edited.scenario.vehicles[1].waypoints[0]).toEqual([21.0, 0.5]);
  });

  it("caps the stack depth", () => {
    const history = new UndoHistory();
    const state = freshState();
    for (let i = 0; i < UNDO_DEPTH + 20; i++) history.push(state);
    expect(history.depth).toBe(UNDO_DEPTH);
  });

  it("returns null when exhausted", () => {
    expect(new UndoHistory().undo()).toBeNull();
  });
});

describe("save bookkeeping", () => {
  it("clears dirty after a successful save", () => {
    const state = dragWaypoint(freshState(),
                               { vehicleId: 1, segment: "waypoints", index: 0 },
                               [21.0, 0.2], "free");
    const saved = markSaved(state);
    expect(saved.dirty).toBe(false);
    expect(saved.errors).toEqual([]);
  });

  it("keeps local edits on rejection and surfaces the violations", () => {
    const state = dragWaypoint(freshState(),
                               { vehicleId: 1, segment: "waypoints", index: 0 },
                               [21.0, 0.2], "free");
    const rejected = markRejected(state, ["vehicle 1: continuity violated"]);
    expect(rejected.dirty).toBe(true);
    expect(rejected.scenario.vehicles[1].waypoints[0]).toEqual([21.0, 0.2]);
    expect(rejected.errors[0]).toContain("continuity");
  });
});

describe("view transform", () => {
  it("round trips world and screen coordinates", () => {
    const scenario = parseScenario(fixtureBytes);
    const view = fitView(scenario, 800, 600);
    const world: [number, number] = [12.5, -3.25];
    const screen = worldToScreen(view, 800, 600, world);
    const back = screenToWorld(view, 800, 600, screen);
    expect(back[0]).toBeCloseTo(world[0], 10);
    expect(back[1]).toBeCloseTo(world[1], 10);
  });

  it("doubling zoom doubles on-screen separations", () => {
    const scenario = parseScenario(fixtureBytes);
    const view = fitView(scenario, 800, 600);
    const zoomed = zoomAt(view, 2.0, 800, 600, [400, 300]);
    const a: [number, number] = [10, 0];
    const b: [number, number] = [30, -5];
    const d1 = Math.hypot(
      ...(worldToScreen(view, 800, 600, a).map((v, i) => v - worldToScreen(view, 800, 600, b)[i]) as [number, number]),
    );
    const d2 = Math.hypot(
      ...(worldToScreen(zoomed, 800, 600, a).map((v, i) => v - worldToScreen(zoomed, 800, 600, b)[i]) as [number, number]),
    );
    expect(d2 / d1).toBeCloseTo(2.0, 10);
  });

  it("select never mutates the scenario", () => {
    const state = freshState();
    const before = canonicalScenario(state.scenario);
    select(state, { vehicleId: 1, segment: "waypoints", index: 0 });
    expect(canonicalScenario(state.scenario)).toBe(before);
  });
});
