/** State-to-wire mapping rules: pinning is fixed_dims, weights are
 * weights, weight 1 is the only client-side default, and server-default
 * fields are omitted rather than spelled out. */

import { describe, expect, it } from "vitest";

import { cfBody, effectiveWeights, evaluateBody, projectionPath, setBody } from "../src/query.js";
import { emptyState, type ExplorerState } from "../src/state.js";

function stateWith(values: number[]): ExplorerState {
  const state = emptyState();
  state.modelId = "cafe0123cafe0123";
  state.features = values.map((value, i) => ({
    name: `x${i}`,
    value,
    pinned: false,
    weight: 1,
  }));
  return state;
}

describe("cf body", () => {
  it("a plain query body carries only x", () => {
    const body = cfBody(stateWith([0.5, -1, 2]));
    expect(body).toStrictEqual({ x: [0.5, -1, 2] });
    expect(Object.keys(body)).toStrictEqual(["x"]);
  });

  it("pinned features map 1:1 to ascending fixed_dims", () => {
    const state = stateWith([0, 1, 2, 3]);
    state.features[2]!.pinned = true;
    state.features[0]!.pinned = true;
    expect(cfBody(state).fixed_dims).toStrictEqual([0, 2]);
  });

  it("weights pass through and unit weights are omitted", () => {
    const state = stateWith([0, 0]);
    expect(cfBody(state).weights).toBeUndefined();
    state.features[1]!.weight = 4;
    expect(cfBody(state).weights).toStrictEqual([1, 4]);
  });

  it("a pinned feature's weight is ignored", () => {
    const state = stateWith([0, 0]);
    state.features[0]!.pinned = true;
    state.features[0]!.weight = 100;
    expect(effectiveWeights(state)).toStrictEqual([1, 1]);
    expect(cfBody(state)).toStrictEqual({ x: [0, 0], fixed_dims: [0] });
  });

  it("the target travels in the service's own wire shape", () => {
    const state = stateWith([1]);
    state.target = { kind: "interval", low: "-inf", high: 2.5 };
    expect(cfBody(state).target).toStrictEqual({ kind: "interval", low: "-inf", high: 2.5 });
  });

  it("stats is attached only when asked for", () => {
    const state = stateWith([1]);
    expect("stats" in cfBody(state)).toBe(false);
    expect(cfBody(state, true).stats).toBe(true);
  });

  it("pin then unpin equals a session that never pinned", () => {
    const tweaked = stateWith([3, 4, 5]);
    tweaked.target = { kind: "class", class: 1 };
    tweaked.features[1]!.pinned = true;
    tweaked.features[1]!.pinned = false;
    const fresh = stateWith([3, 4, 5]);
    fresh.target = { kind: "class", class: 1 };
    expect(cfBody(tweaked)).toStrictEqual(cfBody(fresh));
  });
});

describe("set body", () => {
  it("adds radius and epsilon_pred on top of the point query", () => {
    const state = stateWith([1, 2]);
    state.radius = 4;
    state.epsilonPred = 0.25;
    expect(setBody(state)).toStrictEqual({ x: [1, 2], radius: 4, epsilon_pred: 0.25 });
  });

  it("omits a radius the user has not set", () => {
    const state = stateWith([1, 2]);
    expect(setBody(state)).toStrictEqual({ x: [1, 2] });
  });
});

describe("evaluate body", () => {
  it("sends exactly the feature values", () => {
    expect(evaluateBody(stateWith([1.25, -3]))).toStrictEqual({ x: [1.25, -3] });
  });
});

describe("projection path", () => {
  it("renders a full parameter set in a fixed order", () => {
    const state = stateWith([0.5, -1, 2]);
    state.projectionDims = [0, 2];
    state.radius = 4;
    state.target = { kind: "class", class: 1 };
    state.features[1]!.pinned = true;
    state.features[2]!.weight = 4;
    state.pageOffset = 5;
    state.pageLimit = 5;
    expect(projectionPath(state)).toBe(
      "/models/cafe0123cafe0123/projection?dims=0%2C2&x=0.5%2C-1%2C2&radius=4" +
        "&class=1&fix=1%3A-1&weight=2%3A4&offset=5&limit=5"
    );
  });

  it("spells interval bounds as LO:HI including infinities", () => {
    const state = stateWith([0]);
    state.projectionDims = [0, 1];
    state.radius = 1;
    state.target = { kind: "interval", low: "-inf", high: 3.5 };
    expect(projectionPath(state)).toContain("interval=-inf%3A3.5");
  });

  it("threshold targets carry epsilon and side", () => {
    const state = stateWith([0]);
    state.projectionDims = [0, 1];
    state.radius = 1;
    state.target = { kind: "threshold", epsilon: 0.7, side: "ge" };
    expect(projectionPath(state)).toContain("epsilon=0.7&side=ge");
  });

  it("a bare epsilon_pred becomes the epsilon parameter", () => {
    const state = stateWith([0]);
    state.projectionDims = [0, 1];
    state.radius = 1;
    state.epsilonPred = 0.25;
    expect(projectionPath(state)).toContain("epsilon=0.25");
    expect(projectionPath(state)).not.toContain("side");
  });

  it("defaults (offset 0, no limit) leave no trace in the path", () => {
    const state = stateWith([0]);
    state.projectionDims = [0, 1];
    state.radius = 1;
    const path = projectionPath(state);
    expect(path).not.toContain("offset");
    expect(path).not.toContain("limit");
  });

  it("requires a model and projection dims", () => {
    const state = stateWith([0]);
    state.projectionDims = [0, 1];
    state.modelId = null;
    expect(() => projectionPath(state)).toThrow("no model");
    const other = stateWith([0]);
    expect(() => projectionPath(other)).toThrow("dims");
  });
});
