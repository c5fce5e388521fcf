// The three service endpoints; nothing else is ever called.

import { Conflict, Scenario, parseScenario } from "./model.js";
import { canonicalScenario } from "./canonical.js";

export class SaveRejected extends Error {
  constructor(public violations: string[]) {
    super(violations.join("; "));
  }
}

export async function fetchScenario(base = ""): Promise<Scenario> {
  const resp = await fetch(`${base}/scenario`);
  if (!resp.ok) throw new Error(`GET /scenario failed: ${resp.status}`);
  return parseScenario(await resp.text());
}

export async function putScenario(scenario: Scenario, base = ""): Promise<void> {
  const resp = await fetch(`${base}/scenario`, {
    method: "PUT",
    headers: { "Content-Type": "application/json" },
    body: canonicalScenario(scenario),
  });
  if (resp.status === 422) {
    const body = (await resp.json()) as { errors?: string[] };
    throw new SaveRejected(body.errors ?? ["scenario rejected"]);
  }
  if (!resp.ok) throw new Error(`PUT /scenario failed: ${resp.status}`);
}

export async function checkOverlaps(base = ""): Promise<Conflict[]> {
  const resp = await fetch(`${base}/check`, { method: "POST" });
  if (!resp.ok) throw new Error(`POST /check failed: ${resp.status}`);
  const body = (await resp.json()) as { conflicts: Conflict[] };
  return body.conflicts;
}
