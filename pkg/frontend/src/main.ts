// Wiring: canvas interactions, toolbar, save/check round trips.

import { fetchScenario, putScenario, checkOverlaps, SaveRejected } from "./api.js";
import {
  AxisLock,
  EditorState,
  Selection,
  UndoHistory,
  createState,
  dragWaypoint,
  markRejected,
  markSaved,
  select,
  withConflicts,
} from "./state.js";
import { Vec2 } from "./model.js";
import {
  ViewTransform,
  draw,
  fitView,
  hitTestWaypoint,
  pan,
  screenToWorld,
  zoomAt,
} from "./view.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const errorsEl = document.getElementById("errors")!;
const conflictsEl = document.getElementById("conflicts")!;

let state: EditorState | null = null;
let view: ViewTransform | null = null;
const history = new UndoHistory();

function axisLock(): AxisLock {
  const checked = document.querySelector<HTMLInputElement>("input[name=lock]:checked");
  return (checked?.value as AxisLock) ?? "free";
}

function render(): void {
  if (!state || !view) return;
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  draw(ctx, canvas.width, canvas.height, state, view);
  statusEl.textContent = state.dirty
    ? state.offRoad ? "unsaved edits (waypoint off the road)" : "unsaved edits"
    : "saved";
  statusEl.className = state.dirty ? (state.offRoad ? "warn" : "dirty") : "clean";
  errorsEl.textContent = state.errors.join("\n");
  conflictsEl.textContent = state.conflicts.length
    ? state.conflicts.map((c) =>
        `vehicles ${c.vehicle_a} and ${c.vehicle_b} start ${c.distance.toFixed(2)} m apart`,
      ).join("\n")
    : "no initialization overlaps";
}

async function refreshConflicts(): Promise<void> {
  if (!state) return;
  try {
    state = withConflicts(state, await checkOverlaps());
  } catch (err) {
    state = markRejected(state, [String(err)]);
  }
  render();
}

async function save(): Promise<void> {
  if (!state || !state.dirty) return;
  try {
    await putScenario(state.scenario);
    state = markSaved(state);
  } catch (err) {
    if (err instanceof SaveRejected) {
      state = markRejected(state, err.violations);
    } else {
      state = markRejected(state, [`save failed, retry: ${String(err)}`]);
    }
  }
  render();
}

interface DragContext {
  selection: Selection;
  moved: boolean;
}

let dragging: DragContext | null = null;
let panning: { lastX: number; lastY: number } | null = null;
let preview: EditorState | null = null;

canvas.addEventListener("mousedown", (ev) => {
  if (!state || !view) return;
  const screen: Vec2 = [ev.offsetX, ev.offsetY];
  const hit = hitTestWaypoint(state, view, canvas.width, canvas.height, screen);
  if (hit) {
    dragging = { selection: hit, moved: false };
    state = select(state, hit);
    render();
  } else {
    panning = { lastX: ev.offsetX, lastY: ev.offsetY };
  }
});

canvas.addEventListener("mousemove", (ev) => {
  if (!state || !view) return;
  if (dragging) {
    const target = screenToWorld(view, canvas.width, canvas.height,
                                 [ev.offsetX, ev.offsetY]);
    preview = dragWaypoint(state, dragging.selection, target, axisLock());
    dragging.moved = true;
    draw(ctx, canvas.width, canvas.height, preview, view);
  } else if (panning) {
    view = pan(view, ev.offsetX - panning.lastX, ev.offsetY - panning.lastY);
    panning = { lastX: ev.offsetX, lastY: ev.offsetY };
    render();
  }
});

window.addEventListener("mouseup", () => {
  if (dragging && preview && state && dragging.moved) {
    history.push(state); // one undo step per completed drag
    state = preview;
    render();
    void refreshConflicts();
  }
  dragging = null;
  preview = null;
  panning = null;
});

canvas.addEventListener("wheel", (ev) => {
  if (!view) return;
  ev.preventDefault();
  const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
  view = zoomAt(view, factor, canvas.width, canvas.height, [ev.offsetX, ev.offsetY]);
  render();
});

document.getElementById("save")!.addEventListener("click", () => void save());
document.getElementById("check")!.addEventListener("click", () => void refreshConflicts());
document.getElementById("undo")!.addEventListener("click", () => {
  const prev = history.undo();
  if (prev) {
    state = prev;
    render();
  }
});
document.getElementById("fit")!.addEventListener("click", () => {
  if (state) {
    view = fitView(state.scenario, canvas.width, canvas.height);
    render();
  }
});

window.addEventListener("keydown", (ev) => {
  if ((ev.ctrlKey || ev.metaKey) && ev.key === "s") {
    ev.preventDefault();
    void save();
  }
  if ((ev.ctrlKey || ev.metaKey) && ev.key === "z") {
    ev.preventDefault();
    const prev = history.undo();
    if (prev) {
      state = prev;
      render();
    }
  }
});

window.addEventListener("resize", render);

async function boot(): Promise<void> {
  try {
    const scenario = await fetchScenario();
    state = createState(scenario);
    view = fitView(scenario, canvas.clientWidth || 800, canvas.clientHeight || 600);
    render();
    void refreshConflicts();
  } catch (err) {
    errorsEl.textContent = `failed to load scenario: ${String(err)}`;
  }
}

void boot();
