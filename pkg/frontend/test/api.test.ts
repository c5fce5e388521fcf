import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterEach, describe, expect, it, vi } from "vitest";

import { SaveRejected, checkOverlaps, fetchScenario, putScenario } from "../src/api.js";
import { canonicalScenario } from "../src/canonical.js";
import { parseScenario } from "../src/model.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixtureBytes = readFileSync(join(here, "fixtures", "scenario.json"), "utf-8");

afterEach(() => {
  vi.unstubAllGlobals();
});

function stubFetch(handler: (url: string, init?: RequestInit) => Response) {
  const fn = vi.fn(async (url: string, init?: RequestInit) => handler(url, init));
  vi.stubGlobal("fetch", fn);
  return fn;
}

describe("service endpoints", () => {
  it("GET /scenario parses the served document", async () => {
    stubFetch(() => new Response(fixtureBytes, { status: 200 }));
    const scenario = await fetchScenario();
    expect(scenario.vehicles.length).toBe(3);
    expect(scenario.road.lane_count).toBe(2);
  });

  it("PUT sends the canonical bytes", async () => {
    const fn = stubFetch(() => new Response('{"ok": true}', { status: 200 }));
    const scenario = parseScenario(fixtureBytes);
    await putScenario(scenario);
    const [url, init] = fn.mock.calls[0];
    expect(url).toBe("/scenario");
    expect(init?.method).toBe("PUT");
    expect(init?.body).toBe(fixtureBytes); // unedited save is byte-identical
    expect(init?.body).toBe(canonicalScenario(scenario));
  });

  it("PUT rejection surfaces the violated invariants", async () => {
    stubFetch(() => new Response(
      JSON.stringify({ errors: ["vehicle 0: continuity violated, 5.00 m gap"] }),
      { status: 422 },
    ));
    const scenario = parseScenario(fixtureBytes);
    await expect(putScenario(scenario)).rejects.toSatisfy((err: unknown) => {
      expect(err).toBeInstanceOf(SaveRejected);
      expect((err as SaveRejected).violations[0]).toContain("vehicle 0");
      expect((err as SaveRejected).violations[0]).toContain("continuity");
      return true;
    });
  });

  it("POST /check returns typed conflicts", async () => {
    stubFetch((url) => {
      expect(url).toBe("/check");
      return new Response(JSON.stringify({
        conflicts: [{ vehicle_a: 0, vehicle_b: 1, distance: 2.5, position: [1.0, 0.0] }],
      }), { status: 200 });
    });
    const conflicts = await checkOverlaps();
    expect(conflicts.length).toBe(1);
    expect(conflicts[0].distance).toBe(2.5);
  });
});
