/** State-to-wire mapping.
 *
 * Pinning maps 1:1 to fixed_dims and weights map to weights; the only
 * default the client ever fills in is weight 1. Fields whose value equals
 * the server default (unit weights, no pins, offset 0) are omitted so the
 * body stays canonical, and a pinned feature always contributes weight 1
 * regardless of its stored weight.
 */

import type { Bound, CfQueryBody } from "./api.js";
import type { ExplorerState } from "./state.js";

export function currentPoint(state: ExplorerState): number[] {
  return state.features.map((f) => f.value);
}

export function pinnedDims(state: ExplorerState): number[] {
  const dims: number[] = [];
  state.features.forEach((f, i) => {
    if (f.pinned) dims.push(i);
  });
  return dims;
}

export function effectiveWeights(state: ExplorerState): number[] {
  return state.features.map((f) => (f.pinned ? 1 : f.weight));
}

/** Body for POST /models/{id}/cf. */
export function cfBody(state: ExplorerState, stats = false): CfQueryBody {
  const body: CfQueryBody = { x: currentPoint(state) };
  if (state.target !== null) body.target = state.target;
  const fixed = pinnedDims(state);
  if (fixed.length > 0) body.fixed_dims = fixed;
  const weights = effectiveWeights(state);
  if (weights.some((w) => w !== 1)) body.weights = weights;
  if (stats) body.stats = true;
  return body;
}

/** Body for POST /models/{id}/cfset: the point query plus the radius and,
 * for regression bands, epsilon_pred. */
export function setBody(state: ExplorerState, stats = false): CfQueryBody {
  const body = cfBody(state, stats);
  if (state.radius !== null) body.radius = state.radius;
  if (state.epsilonPred !== null) body.epsilon_pred = state.epsilonPred;
  return body;
}

export function evaluateBody(state: ExplorerState): { x: number[] } {
  return { x: currentPoint(state) };
}

function boundText(b: Bound): string {
  return typeof b === "number" ? String(b) : b;
}

/** Query-string path for GET /models/{id}/projection. Parameter order is
 * fixed (dims, x, radius, target, fix, weight, offset, limit) so equal
 * states produce byte-identical request paths. */
export function projectionPath(state: ExplorerState): string {
  if (state.modelId === null) throw new Error("no model loaded");
  if (state.projectionDims === null) throw new Error("no projection dims chosen");
  const pairs: [string, string][] = [
    ["dims", state.projectionDims.map(String).join(",")],
    ["x", currentPoint(state).map(String).join(",")],
  ];
  if (state.radius !== null) pairs.push(["radius", String(state.radius)]);
  const target = state.target;
  if (target !== null) {
    if (target.kind === "class") {
      pairs.push(["class", String(target.class)]);
    } else if (target.kind === "interval") {
      pairs.push(["interval", `${boundText(target.low)}:${boundText(target.high)}`]);
    } else {
      pairs.push(["epsilon", String(target.epsilon)], ["side", target.side]);
    }
  } else if (state.epsilonPred !== null) {
    pairs.push(["epsilon", String(state.epsilonPred)]);
  }
  state.features.forEach((f, i) => {
    if (f.pinned) pairs.push(["fix", `${i}:${String(f.value)}`]);
  });
  effectiveWeights(state).forEach((w, i) => {
    if (w !== 1) pairs.push(["weight", `${i}:${String(w)}`]);
  });
  if (state.pageOffset !== 0) pairs.push(["offset", String(state.pageOffset)]);
  if (state.pageLimit !== null) pairs.push(["limit", String(state.pageLimit)]);
  return `/models/${state.modelId}/projection?${new URLSearchParams(pairs).toString()}`;
}
