/** Shared test plumbing: scripted transports that intercept every request
 * the explorer sends, and the patch format recorded sessions use to drive
 * state changes between requests. */

import { readFileSync } from "node:fs";

import { expect } from "vitest";

import type { CfTargetWire } from "../src/api.js";
import type { ExplorerSession } from "../src/session.js";
import type { Transport, TransportRequest, TransportResponse } from "../src/transport.js";

export interface SessionPatch {
  values?: Record<string, number>;
  pin?: number[];
  unpin?: number[];
  weights?: Record<string, number>;
  target?: CfTargetWire | null;
  radius?: number | null;
  epsilonPred?: number | null;
  dims?: [number, number] | null;
  page?: [number, number | null];
  showUnchanged?: boolean;
  stats?: boolean;
}

export interface RecordedStep {
  patch: SessionPatch;
  action: "load" | "cf" | "cfset" | "evaluate" | "projection";
  request: { method: "GET" | "POST"; path: string; body?: unknown };
  response: { status: number; body: unknown };
}

export interface RecordedSession {
  name: string;
  steps: RecordedStep[];
}

export function loadFixture(): RecordedSession[] {
  const raw = readFileSync(new URL("./fixtures/sessions.json", import.meta.url), "utf8");
  return (JSON.parse(raw) as { sessions: RecordedSession[] }).sessions;
}

/** Apply a recorded state patch through the session's own setters. */
export function applyPatch(session: ExplorerSession, patch: SessionPatch): void {
  for (const [dim, value] of Object.entries(patch.values ?? {})) {
    session.setValue(Number(dim), value);
  }
  for (const dim of patch.pin ?? []) session.setPinned(dim, true);
  for (const dim of patch.unpin ?? []) session.setPinned(dim, false);
  for (const [dim, weight] of Object.entries(patch.weights ?? {})) {
    session.setWeight(Number(dim), weight);
  }
  if ("target" in patch) session.setTarget(patch.target ?? null);
  if ("radius" in patch) session.setRadius(patch.radius ?? null);
  if ("epsilonPred" in patch) session.setEpsilonPred(patch.epsilonPred ?? null);
  if ("dims" in patch) session.setProjectionDims(patch.dims ?? null);
  if (patch.page !== undefined) session.setPage(patch.page[0], patch.page[1]);
  if (patch.showUnchanged !== undefined) session.setShowUnchanged(patch.showUnchanged);
}

/** Transport that verifies each request against the recorded one, in
 * order, and replays the recorded response. */
export function scriptedTransport(steps: RecordedStep[]): {
  transport: Transport;
  assertDone: () => void;
} {
  let next = 0;
  const transport: Transport = async (req) => {
    const step = steps[next];
    expect(step, `request beyond script: ${req.method} ${req.path}`).toBeDefined();
    next += 1;
    const want = (step as RecordedStep).request;
    expect(req.method).toBe(want.method);
    expect(req.path).toBe(want.path);
    expect(req.body).toStrictEqual(want.body);
    return {
      status: (step as RecordedStep).response.status,
      body: structuredClone((step as RecordedStep).response.body),
    };
  };
  return {
    transport,
    assertDone: () => expect(next, "script not fully consumed").toBe(steps.length),
  };
}

export interface HeldRequest {
  req: TransportRequest;
  resolve: (resp: TransportResponse) => void;
  reject: (err: unknown) => void;
}

/** Transport whose responses are released by hand, for racing requests. */
export function manualTransport(): { transport: Transport; held: HeldRequest[] } {
  const held: HeldRequest[] = [];
  const transport: Transport = (req) =>
    new Promise<TransportResponse>((resolve, reject) => {
      held.push({ req, resolve, reject });
    });
  return { transport, held };
}
