/** Session behaviour: one request in flight at a time, stale responses
 * discarded, errors surfaced as banners without clobbering state. */

import { describe, expect, it } from "vitest";

import type { CfFoundPayload, ModelMetadataPayload } from "../src/api.js";
import { ExplorerSession } from "../src/session.js";
import { emptyState } from "../src/state.js";
import { manualTransport, scriptedTransport } from "./helpers.js";

function loadedState(values: number[]) {
  const state = emptyState();
  state.modelId = "cafe0123cafe0123";
  state.features = values.map((value, i) => ({
    name: `x${i}`,
    value,
    pinned: false,
    weight: 1,
  }));
  state.target = { kind: "class", class: 1 };
  return state;
}

function foundBody(point: number[], sq: number): CfFoundPayload {
  return {
    status: "ok",
    point,
    sq_dist: sq,
    dist: Math.sqrt(sq),
    nudged: false,
    validated: true,
    region: {
      box: point.map(() => [0, "inf"] as [number, "inf"]),
      member_leaf_ids: [0],
      margin: [0.5],
      score: [0.5],
      class: 1,
    },
  };
}

describe("single in-flight query", () => {
  it("a newer submission aborts the pending request", async () => {
    const { transport, held } = manualTransport();
    const session = new ExplorerSession(transport, loadedState([0]));
    const first = session.runQuery();
    expect(held).toHaveLength(1);
    expect(held[0]!.req.signal?.aborted).toBe(false);
    const second = session.runQuery();
    expect(held).toHaveLength(2);
    expect(held[0]!.req.signal?.aborted).toBe(true);
    expect(held[1]!.req.signal?.aborted).toBe(false);
    held[1]!.resolve({ status: 200, body: foundBody([2], 4) });
    expect(await second).toBe("applied");
    expect(session.state.lastResult).toStrictEqual(foundBody([2], 4));
    held[0]!.reject(new Error("aborted"));
    expect(await first).toBe("superseded");
  });

  it("a stale response is discarded even if it settles later", async () => {
    const { transport, held } = manualTransport();
    const session = new ExplorerSession(transport, loadedState([0]));
    const first = session.runQuery();
    const second = session.runQuery();
    held[1]!.resolve({ status: 200, body: foundBody([2], 4) });
    expect(await second).toBe("applied");
    held[0]!.resolve({ status: 200, body: foundBody([99], 1) });
    expect(await first).toBe("superseded");
    expect(session.state.lastResult).toStrictEqual(foundBody([2], 4));
    expect(session.banner).toBeNull();
  });

  it("a stale rejection raises no banner", async () => {
    const { transport, held } = manualTransport();
    const session = new ExplorerSession(transport, loadedState([0]));
    const first = session.runQuery();
    const second = session.runQuery();
    held[0]!.reject(new Error("aborted"));
    held[1]!.resolve({ status: 200, body: foundBody([2], 4) });
    expect(await first).toBe("superseded");
    expect(await second).toBe("applied");
    expect(session.banner).toBeNull();
  });

  it("different actions share the single slot", async () => {
    const { transport, held } = manualTransport();
    const session = new ExplorerSession(transport, loadedState([0]));
    const query = session.runQuery();
    const evaluation = session.evaluate();
    expect(held[0]!.req.signal?.aborted).toBe(true);
    held[1]!.resolve({ status: 200, body: { margin: [0.5], output: [0.5], class: 1 } });
    held[0]!.reject(new Error("aborted"));
    expect(await query).toBe("superseded");
    expect(await evaluation).toBe("applied");
    expect(session.lastEvaluation).toStrictEqual({ margin: [0.5], output: [0.5], class: 1 });
  });
});

describe("error surfacing", () => {
  it("a network failure becomes a banner and state survives", async () => {
    const state = loadedState([1]);
    state.lastResult = foundBody([2], 4);
    const session = new ExplorerSession(async () => {
      throw new Error("connection refused");
    }, state);
    expect(await session.runQuery()).toBe("failed");
    expect(session.banner).toStrictEqual({ kind: "error", message: "connection refused" });
    expect(session.state.lastResult).toStrictEqual(foundBody([2], 4));
  });

  it("a 422 keeps the reason and the previous inputs", async () => {
    const body = { status: "not_found", reason: "no region of the model satisfies the target" };
    const session = new ExplorerSession(async () => ({ status: 422, body }), loadedState([1, 2]));
    expect(await session.runQuery()).toBe("applied");
    expect(session.banner).toStrictEqual({ kind: "infeasible", reason: body.reason });
    expect(session.state.lastResult).toStrictEqual(body);
    expect(session.state.features.map((f) => f.value)).toStrictEqual([1, 2]);
  });

  it("a 503 carries partial telemetry into the banner", async () => {
    const stats = { explored_nodes: 7, leaves_considered: null, elapsed: 0.01, bound_log: [] };
    const session = new ExplorerSession(
      async () => ({ status: 503, body: { error: "search exceeded its time budget", stats } }),
      loadedState([0])
    );
    expect(await session.runQuery()).toBe("failed");
    expect(session.banner).toStrictEqual({
      kind: "budget",
      message: "search exceeded its time budget",
      stats,
    });
  });

  it("a 413 banner reports the emitted count and the cap", async () => {
    const session = new ExplorerSession(
      async () => ({ status: 413, body: { error: "too many regions", emitted: 9001, cap: 5000 } }),
      loadedState([0])
    );
    session.setRadius(100);
    expect(await session.runSet()).toBe("failed");
    expect(session.banner).toStrictEqual({
      kind: "cap",
      message: "too many regions",
      emitted: 9001,
      cap: 5000,
    });
  });

  it("running a query without a model is a local error", async () => {
    const session = new ExplorerSession(async () => ({ status: 200, body: {} }));
    await expect(session.runQuery()).rejects.toThrow("no model loaded");
  });
});

describe("model loading", () => {
  const meta: ModelMetadataPayload = {
    model_id: "cafe0123cafe0123",
    dims: 2,
    classes: 2,
    num_trees: 4,
    num_leaves: 12,
    aggregation: { kind: "softmax-sum", base_score: 0 },
    feature_names: ["income", "debt"],
  };

  it("builds the feature table from metadata", async () => {
    const { transport } = scriptedTransport([
      {
        patch: {},
        action: "load",
        request: { method: "GET", path: "/models/cafe0123cafe0123" },
        response: { status: 200, body: meta },
      },
    ]);
    const session = new ExplorerSession(transport);
    expect(await session.loadModel("cafe0123cafe0123")).toBe("applied");
    expect(session.state.modelId).toBe(meta.model_id);
    expect(session.metadata).toStrictEqual(meta);
    expect(session.state.features).toStrictEqual([
      { name: "income", value: 0, pinned: false, weight: 1 },
      { name: "debt", value: 0, pinned: false, weight: 1 },
    ]);
  });

  it("keeps a fragment-restored table whose length matches", async () => {
    const state = loadedState([3, 4]);
    state.features[0]!.pinned = true;
    const { transport } = scriptedTransport([
      {
        patch: {},
        action: "load",
        request: { method: "GET", path: "/models/cafe0123cafe0123" },
        response: { status: 200, body: meta },
      },
    ]);
    const session = new ExplorerSession(transport, state);
    expect(await session.loadModel("cafe0123cafe0123")).toBe("applied");
    expect(session.state.features.map((f) => f.value)).toStrictEqual([3, 4]);
    expect(session.state.features[0]!.pinned).toBe(true);
  });

  it("rebuilds the table when the dimension count differs", async () => {
    const state = loadedState([1, 2, 3]);
    const { transport } = scriptedTransport([
      {
        patch: {},
        action: "load",
        request: { method: "GET", path: "/models/cafe0123cafe0123" },
        response: { status: 200, body: meta },
      },
    ]);
    const session = new ExplorerSession(transport, state);
    await session.loadModel("cafe0123cafe0123");
    expect(session.state.features).toHaveLength(2);
    expect(session.state.features.map((f) => f.name)).toStrictEqual(["income", "debt"]);
  });
});
