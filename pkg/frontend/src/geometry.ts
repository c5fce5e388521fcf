// Polyline geometry for axis-locked dragging: nearest road point, tangent
// and left normal at that point.

import { Vec2 } from "./model.js";

export interface RoadFrame {
  point: Vec2;
  tangent: Vec2;
  normal: Vec2; // left of travel direction
  distance: number;
}

export function nearestRoadFrame(centerline: Vec2[], p: Vec2): RoadFrame {
  let best: RoadFrame | null = null;
  for (let i = 0; i + 1 < centerline.length; i++) {
    const [ax, ay] = centerline[i];
    const [bx, by] = centerline[i + 1];
    const dx = bx - ax;
    const dy = by - ay;
    const len2 = dx * dx + dy * dy;
    if (len2 === 0) continue;
    let t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / len2;
    t = Math.max(0, Math.min(1, t));
    const qx = ax + t * dx;
    const qy = ay + t * dy;
    const dist = Math.hypot(p[0] - qx, p[1] - qy);
    if (best === null || dist < best.distance) {
      const len = Math.sqrt(len2);
      const tangent: Vec2 = [dx / len, dy / len];
      best = {
        point: [qx, qy],
        tangent,
        normal: [-tangent[1], tangent[0]],
        distance: dist,
      };
    }
  }
  if (best === null) throw new Error("road centerline has no usable segment");
  return best;
}

export function roadHalfWidth(laneCount: number, laneWidth: number): number {
  return (laneCount * laneWidth) / 2;
}

export function offsetPolyline(centerline: Vec2[], offset: number): Vec2[] {
  // positive offset shifts toward the left of the travel direction
  return centerline.map((p, i) => {
    const prev = centerline[Math.max(0, i - 1)];
    const next = centerline[Math.min(centerline.length - 1, i + 1)];
    const dx = next[0] - prev[0];
    const dy = next[1] - prev[1];
    const len = Math.hypot(dx, dy) || 1;
    return [p[0] - (dy / len) * offset, p[1] + (dx / len) * offset] as Vec2;
  });
}
