// Editor state and the edit operations over it. All operations are pure:
// they return fresh state objects, which keeps the undo stack trivial and
// the renderer read-only.

import { Conflict, Scenario, Vec2 } from "./model.js";
import { nearestRoadFrame, roadHalfWidth } from "./geometry.js";

export type Segment = "lead_in" | "waypoints";
export type AxisLock = "free" | "lateral" | "longitudinal";

export interface Selection {
  vehicleId: number;
  segment: Segment;
  index: number;
}

export interface EditorState {
  scenario: Scenario;
  selection: Selection | null;
  dirty: boolean;
  conflicts: Conflict[];
  errors: string[]; // latest save rejection, empty when clean
  offRoad: boolean; // last drag left the paved width (warning only)
}

export const UNDO_DEPTH = 100;

export function createState(scenario: Scenario): EditorState {
  return {
    scenario,
    selection: null,
    dirty: false,
    conflicts: [],
    errors: [],
    offRoad: false,
  };
}

function cloneState(state: EditorState): EditorState {
  return structuredClone(state);
}

export function select(state: EditorState, selection: Selection | null): EditorState {
  return { ...cloneState(state), selection };
}

export function waypointAt(scenario: Scenario, sel: Selection): Vec2 {
  const vehicle = scenario.vehicles.find((v) => v.id === sel.vehicleId);
  if (!vehicle) throw new Error(`no vehicle with id ${sel.vehicleId}`);
  const pts = vehicle[sel.segment];
  if (sel.index < 0 || sel.index >= pts.length) {
    throw new Error(`waypoint index ${sel.index} out of range for ${sel.segment}`);
  }
  return pts[sel.index];
}

export function dragWaypoint(
  state: EditorState,
  sel: Selection,
  target: Vec2,
  lock: AxisLock,
): EditorState {
  const current = waypointAt(state.scenario, sel);
  let moved: Vec2;
  if (lock === "free") {
    moved = [target[0], target[1]];
  } else {
    const frame = nearestRoadFrame(state.scenario.road.centerline, current);
    const axis = lock === "lateral" ? frame.normal : frame.tangent;
    const d = (target[0] - current[0]) * axis[0] + (target[1] - current[1]) * axis[1];
    moved = [current[0] + d * axis[0], current[1] + d * axis[1]];
  }
  if (moved[0] === current[0] && moved[1] === current[1]) {
    return select(state, sel); // nothing moved: selection only
  }
  const next = cloneState(state);
  const vehicle = next.scenario.vehicles.find((v) => v.id === sel.vehicleId)!;
  vehicle[sel.segment][sel.index] = moved;
  next.selection = sel;
  next.dirty = true;
  const frame = nearestRoadFrame(next.scenario.road.centerline, moved);
  next.offRoad = frame.distance >
    roadHalfWidth(next.scenario.road.lane_count, next.scenario.road.lane_width);
  return next;
}

export function markSaved(state: EditorState): EditorState {
  return { ...cloneState(state), dirty: false, errors: [] };
}

export function markRejected(state: EditorState, errors: string[]): EditorState {
  // local edits are preserved; only the violation list changes
  return { ...cloneState(state), errors };
}

export function withConflicts(state: EditorState, conflicts: Conflict[]): EditorState {
  return { ...cloneState(state), conflicts };
}

export class UndoHistory {
  private past: EditorState[] = [];

  push(state: EditorState): void {
    this.past.push(cloneState(state));
    if (this.past.length > UNDO_DEPTH) {
      this.past.shift();
    }
  }

  undo(): EditorState | null {
    const prev = this.past.pop();
    return prev ?? null;
  }

  get depth(): number {
    return this.past.length;
  }
}
