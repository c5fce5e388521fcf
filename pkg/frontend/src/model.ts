// Scenario schema mirrored from the extraction service's JSON contract.

export type Vec2 = [number, number];

export interface Road {
  centerline: Vec2[];
  lane_count: number;
  lane_width: number;
}

export interface Vehicle {
  id: number;
  category: string;
  start_delay: number;
  lead_in: Vec2[];
  waypoints: Vec2[];
  speeds: number[];
}

export interface Scenario {
  road: Road;
  vehicles: Vehicle[];
  frame_rate: number;
  meta: Record<string, string>;
}

export interface Conflict {
  vehicle_a: number;
  vehicle_b: number;
  distance: number;
  position: Vec2;
}

export class ScenarioFormatError extends Error {}

function fail(msg: string): never {
  throw new ScenarioFormatError(msg);
}

function asVec2Array(value: unknown, where: string): Vec2[] {
  if (!Array.isArray(value)) fail(`${where} is not an array`);
  return value.map((p, i) => {
    if (!Array.isArray(p) || p.length !== 2 ||
        typeof p[0] !== "number" || typeof p[1] !== "number" ||
        !isFinite(p[0]) || !isFinite(p[1])) {
      fail(`${where}[${i}] is not a finite [x, y] pair`);
    }
    return [p[0], p[1]] as Vec2;
  });
}

function asNumber(value: unknown, where: string): number {
  if (typeof value !== "number" || !isFinite(value)) fail(`${where} is not a finite number`);
  return value;
}

function asInt(value: unknown, where: string): number {
  const n = asNumber(value, where);
  if (!Number.isInteger(n)) fail(`${where} is not an integer`);
  return n;
}

export function parseScenario(text: string): Scenario {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    fail(`scenario is not valid JSON: ${(err as Error).message}`);
  }
  const doc = raw as Record<string, unknown>;
  if (typeof doc !== "object" || doc === null) fail("scenario root is not an object");
  const roadRaw = doc.road as Record<string, unknown>;
  if (typeof roadRaw !== "object" || roadRaw === null) fail("road is missing");
  const road: Road = {
    centerline: asVec2Array(roadRaw.centerline, "road.centerline"),
    lane_count: asInt(roadRaw.lane_count, "road.lane_count"),
    lane_width: asNumber(roadRaw.lane_width, "road.lane_width"),
  };
  if (road.centerline.length < 2) fail("road.centerline needs at least two points");
  if (!Array.isArray(doc.vehicles)) fail("vehicles is not an array");
  const vehicles = (doc.vehicles as unknown[]).map((v, i) => {
    const rec = v as Record<string, unknown>;
    const vehicle: Vehicle = {
      id: asInt(rec.id, `vehicles[${i}].id`),
      category: typeof rec.category === "string" ? rec.category
        : fail(`vehicles[${i}].category is not a string`),
      start_delay: asNumber(rec.start_delay, `vehicles[${i}].start_delay`),
      lead_in: asVec2Array(rec.lead_in, `vehicles[${i}].lead_in`),
      waypoints: asVec2Array(rec.waypoints, `vehicles[${i}].waypoints`),
      speeds: (Array.isArray(rec.speeds) ? rec.speeds : fail(`vehicles[${i}].speeds`))
        .map((s, j) => asNumber(s, `vehicles[${i}].speeds[${j}]`)),
    };
    if (vehicle.speeds.length !== vehicle.waypoints.length) {
      fail(`vehicles[${i}]: ${vehicle.speeds.length} speeds for ` +
           `${vehicle.waypoints.length} waypoints`);
    }
    return vehicle;
  });
  const metaRaw = (doc.meta ?? {}) as Record<string, unknown>;
  const meta: Record<string, string> = {};
  for (const key of Object.keys(metaRaw)) {
    const v = metaRaw[key];
    if (typeof v !== "string") fail(`meta.${key} is not a string`);
    meta[key] = v;
  }
  return {
    road,
    vehicles,
    frame_rate: asNumber(doc.frame_rate, "frame_rate"),
    meta,
  };
}
