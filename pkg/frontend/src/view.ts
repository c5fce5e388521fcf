// Top-down canvas rendering with pan/zoom. The view transform is pure data;
// drawing never touches the scenario.

import { Scenario, Vec2 } from "./model.js";
import { EditorState, Selection } from "./state.js";
import { offsetPolyline, roadHalfWidth } from "./geometry.js";

export interface ViewTransform {
  scale: number; // screen pixels per meter
  centerX: number; // world point at the canvas center
  centerY: number;
}

export function fitView(scenario: Scenario, width: number, height: number): ViewTransform {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const [x, y] of scenario.road.centerline) {
    xs.push(x);
    ys.push(y);
  }
  for (const v of scenario.vehicles) {
    for (const [x, y] of [...v.lead_in, ...v.waypoints]) {
      xs.push(x);
      ys.push(y);
    }
  }
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 10);
  const spanY = Math.max(maxY - minY, 10);
  return {
    scale: 0.9 * Math.min(width / spanX, height / spanY),
    centerX: (minX + maxX) / 2,
    centerY: (minY + maxY) / 2,
  };
}

export function worldToScreen(view: ViewTransform, w: number, h: number, p: Vec2): Vec2 {
  return [
    w / 2 + (p[0] - view.centerX) * view.scale,
    h / 2 - (p[1] - view.centerY) * view.scale, // world y points left/up on screen
  ];
}

export function screenToWorld(view: ViewTransform, w: number, h: number, s: Vec2): Vec2 {
  return [
    view.centerX + (s[0] - w / 2) / view.scale,
    view.centerY - (s[1] - h / 2) / view.scale,
  ];
}

export function zoomAt(view: ViewTransform, factor: number, w: number, h: number,
                       anchor: Vec2): ViewTransform {
  const world = screenToWorld(view, w, h, anchor);
  const scale = Math.min(Math.max(view.scale * factor, 0.05), 500);
  // keep the anchor's world point under the cursor
  return {
    scale,
    centerX: world[0] - (anchor[0] - w / 2) / scale,
    centerY: world[1] + (anchor[1] - h / 2) / scale,
  };
}

export function pan(view: ViewTransform, dxPx: number, dyPx: number): ViewTransform {
  return {
    scale: view.scale,
    centerX: view.centerX - dxPx / view.scale,
    centerY: view.centerY + dyPx / view.scale,
  };
}

const VEHICLE_COLORS = ["#0a7", "#d60", "#06c", "#a0c", "#c33", "#088", "#860"];

function polyline(ctx: CanvasRenderingContext2D, view: ViewTransform,
                  w: number, h: number, pts: Vec2[]): void {
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [sx, sy] = worldToScreen(view, w, h, p);
    if (i === 0) ctx.moveTo(sx, sy);
    else ctx.lineTo(sx, sy);
  });
  ctx.stroke();
}

export function draw(ctx: CanvasRenderingContext2D, w: number, h: number,
                     state: EditorState, view: ViewTransform): void {
  const { scenario } = state;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#181c20";
  ctx.fillRect(0, 0, w, h);

  // road: edges plus interior lane boundaries
  const half = roadHalfWidth(scenario.road.lane_count, scenario.road.lane_width);
  ctx.strokeStyle = "#4a5258";
  ctx.lineWidth = 2;
  for (const edge of [-half, half]) {
    polyline(ctx, view, w, h, offsetPolyline(scenario.road.centerline, edge));
  }
  ctx.strokeStyle = "#3a4046";
  ctx.lineWidth = 1;
  ctx.setLineDash([6, 8]);
  for (let lane = 1; lane < scenario.road.lane_count; lane++) {
    const off = -half + lane * scenario.road.lane_width;
    polyline(ctx, view, w, h, offsetPolyline(scenario.road.centerline, off));
  }
  ctx.setLineDash([]);
  ctx.strokeStyle = "#5a6670";
  ctx.lineWidth = 1;
  polyline(ctx, view, w, h, scenario.road.centerline);

  // vehicles: lead-ins dashed, main waypoints solid with handles
  scenario.vehicles.forEach((vehicle, vi) => {
    const color = VEHICLE_COLORS[vi % VEHICLE_COLORS.length];
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    if (vehicle.lead_in.length > 1) {
      ctx.setLineDash([3, 5]);
      polyline(ctx, view, w, h, vehicle.lead_in);
      ctx.setLineDash([]);
    }
    if (vehicle.waypoints.length > 1) {
      polyline(ctx, view, w, h, vehicle.waypoints);
    }
    ctx.fillStyle = color;
    const drawHandles = (pts: Vec2[], segment: Selection["segment"]) => {
      pts.forEach((p, index) => {
        const [sx, sy] = worldToScreen(view, w, h, p);
        const selected = state.selection !== null &&
          state.selection.vehicleId === vehicle.id &&
          state.selection.segment === segment &&
          state.selection.index === index;
        ctx.beginPath();
        ctx.arc(sx, sy, selected ? 6 : 3.5, 0, 2 * Math.PI);
        ctx.fill();
        if (selected) {
          ctx.strokeStyle = "#fff";
          ctx.lineWidth = 1.5;
          ctx.stroke();
          ctx.strokeStyle = color;
        }
      });
    };
    drawHandles(vehicle.lead_in, "lead_in");
    drawHandles(vehicle.waypoints, "waypoints");
    const label = vehicle.waypoints[0] ?? vehicle.lead_in[0];
    if (label) {
      const [sx, sy] = worldToScreen(view, w, h, label);
      ctx.fillStyle = "#cfd8dc";
      ctx.font = "12px sans-serif";
      ctx.fillText(`#${vehicle.id} ${vehicle.category}`, sx + 8, sy - 8);
    }
  });

  // conflicts highlighted at the offending positions
  for (const conflict of state.conflicts) {
    const [sx, sy] = worldToScreen(view, w, h, conflict.position);
    ctx.strokeStyle = "#f43";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(sx, sy, 12, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillStyle = "#f43";
    ctx.font = "11px sans-serif";
    ctx.fillText(
      `#${conflict.vehicle_a}-#${conflict.vehicle_b}: ${conflict.distance.toFixed(1)} m`,
      sx + 14, sy + 4,
    );
  }
}

export function hitTestWaypoint(state: EditorState, view: ViewTransform,
                                w: number, h: number, screen: Vec2,
                                radiusPx = 8): Selection | null {
  let best: Selection | null = null;
  let bestDist = radiusPx;
  for (const vehicle of state.scenario.vehicles) {
    const segments: Array<[Selection["segment"], Vec2[]]> = [
      ["lead_in", vehicle.lead_in],
      ["waypoints", vehicle.waypoints],
    ];
    for (const [segment, pts] of segments) {
      pts.forEach((p, index) => {
        const [sx, sy] = worldToScreen(view, w, h, p);
        const d = Math.hypot(sx - screen[0], sy - screen[1]);
        if (d <= bestDist) {
          bestDist = d;
          best = { vehicleId: vehicle.id, segment, index };
        }
      });
    }
  }
  return best;
}
