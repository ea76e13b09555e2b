/** Wire types of the boxcf HTTP service.
 *
 * Every shape here mirrors a JSON document the service emits or accepts;
 * the explorer never invents fields of its own. Interval endpoints that
 * are unbounded arrive as the strings "inf" / "-inf", never as JSON
 * Infinity, so a bound is `number | string`.
 */

export type Bound = number | "inf" | "-inf";

/** Half-open interval [lo, hi) as a two-element array. */
export type WireInterval = [Bound, Bound];

export type CfTargetWire =
  | { kind: "class"; class: number }
  | { kind: "threshold"; epsilon: number; side: "le" | "ge" }
  | { kind: "interval"; low: Bound; high: Bound };

/** Body of POST /models/{id}/cf and /cfset. */
export interface CfQueryBody {
  x: number[];
  target?: CfTargetWire;
  fixed_dims?: number[];
  weights?: number[];
  radius?: number;
  epsilon_pred?: number;
  stats?: boolean;
}

export interface RegionPayload {
  box: WireInterval[];
  member_leaf_ids: number[];
  margin: number[];
  score: number[];
  class?: number;
  value?: number;
}

export interface StatsPayload {
  explored_nodes: number;
  leaves_considered: number | null;
  elapsed: number;
  bound_log: number[];
}

export interface CfFoundPayload {
  status: "ok";
  point: number[];
  sq_dist: number;
  dist: number;
  nudged: boolean;
  validated: boolean;
  region: RegionPayload;
  stats?: StatsPayload;
}

export interface CfNotFoundPayload {
  status: "not_found";
  reason?: string;
  stats?: StatsPayload;
}

export type CfResponseBody = CfFoundPayload | CfNotFoundPayload;

export interface CfSetItemPayload {
  point: number[];
  sq_dist: number;
  dist: number;
  nudged: boolean;
  region: RegionPayload;
}

export interface CfSetPayload {
  status: "ok";
  count: number;
  items: CfSetItemPayload[];
  stats?: StatsPayload;
}

export interface ProjectedRectPayload {
  x: WireInterval;
  y: WireInterval;
  class?: number;
  value?: number;
  score: number[];
  sq_dist?: number;
}

export interface ProjectionPayload {
  dims: [number, number];
  total: number;
  rects: ProjectedRectPayload[];
  point: [number, number];
}

export interface EvaluationPayload {
  margin: number[];
  output: number[];
  class?: number;
  value?: number;
}

export interface ModelMetadataPayload {
  model_id: string;
  dims: number;
  classes: number;
  num_trees: number;
  num_leaves: number;
  aggregation: { kind: string; base_score: number };
  feature_names: string[] | null;
}

/** Error bodies: 400/404/500 carry {error}; 413 adds emitted/cap; 503 may
 * attach partial stats; 422 reuses the not-found result body. */
export interface ErrorPayload {
  error: string;
  emitted?: number;
  cap?: number;
  stats?: StatsPayload;
}

export function isFound(body: CfResponseBody): body is CfFoundPayload {
  return body.status === "ok";
}
