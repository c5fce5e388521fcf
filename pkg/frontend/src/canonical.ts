// Canonical scenario serialization, byte-compatible with the service's
// exporter: sorted keys, 6-decimal fixed-point floats, integers bare,
// non-ASCII escaped \uXXXX. Load -> save of an unedited scenario must
// reproduce the file exactly.

import { Scenario, Vec2, Vehicle } from "./model.js";

export function formatFloat(x: number): string {
  if (!isFinite(x)) throw new Error(`cannot serialize non-finite number ${x}`);
  // toFixed drops the sign of negative zero; the service keeps it
  if (Object.is(x, -0)) return "-0.000000";
  return x.toFixed(6);
}

function formatInt(x: number): string {
  if (!Number.isInteger(x)) throw new Error(`expected integer, got ${x}`);
  return String(x);
}

const SHORT_ESCAPES: Record<string, string> = {
  '"': '\\"', "\\": "\\\\", "\b": "\\b", "\f": "\\f",
  "\n": "\\n", "\r": "\\r", "\t": "\\t",
};

export function formatString(s: string): string {
  let out = '"';
  for (const ch of s) {
    const short = SHORT_ESCAPES[ch];
    if (short !== undefined) {
      out += short;
      continue;
    }
    const code = ch.codePointAt(0)!;
    if (code >= 0x20 && code <= 0x7e) {
      out += ch;
    } else {
      // escape every UTF-16 unit, matching ensure_ascii JSON output
      for (let i = 0; i < ch.length; i++) {
        out += "\\u" + ch.charCodeAt(i).toString(16).padStart(4, "0");
      }
    }
  }
  return out + '"';
}

function points(pts: Vec2[]): string {
  return "[" + pts.map((p) => `[${formatFloat(p[0])},${formatFloat(p[1])}]`).join(",") + "]";
}

function vehicle(v: Vehicle): string {
  return "{" + [
    `"category":${formatString(v.category)}`,
    `"id":${formatInt(v.id)}`,
    `"lead_in":${points(v.lead_in)}`,
    `"speeds":[${v.speeds.map(formatFloat).join(",")}]`,
    `"start_delay":${formatFloat(v.start_delay)}`,
    `"waypoints":${points(v.waypoints)}`,
  ].join(",") + "}";
}

export function canonicalScenario(s: Scenario): string {
  const meta = "{" + Object.keys(s.meta).sort()
    .map((k) => `${formatString(k)}:${formatString(s.meta[k])}`).join(",") + "}";
  const road = "{" + [
    `"centerline":${points(s.road.centerline)}`,
    `"lane_count":${formatInt(s.road.lane_count)}`,
    `"lane_width":${formatFloat(s.road.lane_width)}`,
  ].join(",") + "}";
  const vehicles = "[" +
    [...s.vehicles].sort((a, b) => a.id - b.id).map(vehicle).join(",") + "]";
  return "{" + [
    `"frame_rate":${formatFloat(s.frame_rate)}`,
    `"meta":${meta}`,
    `"road":${road}`,
    `"vehicles":${vehicles}`,
  ].join(",") + "}\n";
}
