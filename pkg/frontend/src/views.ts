/** View models: what the explorer displays, as plain data.
 *
 * Every number in a view is copied verbatim from a service response (or
 * from the state that produced the request); builders compare values for
 * the changed flag but never derive new quantities. That keeps the UI a
 * faithful window onto the service and makes pass-through testable.
 */

import type {
  Bound,
  EvaluationPayload,
  ModelMetadataPayload,
  StatsPayload,
  WireInterval,
} from "./api.js";
import { isFound } from "./api.js";
import type { ExplorerState } from "./state.js";

export interface DeltaRow {
  index: number;
  name: string;
  pinned: boolean;
  current: number;
  recommended: number;
  changed: boolean;
}

export interface DeltaView {
  kind: "result";
  sqDist: number;
  dist: number;
  nudged: boolean;
  validated: boolean;
  regionClass: number | null;
  regionValue: number | null;
  outcomeLabel: string;
  rows: DeltaRow[];
  visibleRows: DeltaRow[];
  hiddenCount: number;
  stats: StatsPayload | null;
}

export interface InfeasibleView {
  kind: "infeasible";
  reason: string;
}

export interface EmptyView {
  kind: "empty";
}

export type QueryView = DeltaView | InfeasibleView | EmptyView;

function outcomeLabel(klass: number | undefined, value: number | undefined): string {
  return klass !== undefined ? `class ${String(klass)}` : `value ${String(value)}`;
}

/** Two-row per-feature diff of the last counterfactual answer. Unchanged
 * features are hidden from visibleRows unless state.showUnchanged. */
export function buildDeltaView(state: ExplorerState): QueryView {
  const result = state.lastResult;
  if (result === null) return { kind: "empty" };
  if (!isFound(result)) {
    return { kind: "infeasible", reason: result.reason ?? "target unreachable" };
  }
  const rows: DeltaRow[] = state.features.map((f, i) => {
    const recommended = result.point[i];
    if (recommended === undefined) throw new Error(`result point lacks dim ${i}`);
    return {
      index: i,
      name: f.name,
      pinned: f.pinned,
      current: f.value,
      recommended,
      changed: f.value !== recommended,
    };
  });
  const visibleRows = state.showUnchanged ? rows : rows.filter((r) => r.changed);
  return {
    kind: "result",
    sqDist: result.sq_dist,
    dist: result.dist,
    nudged: result.nudged,
    validated: result.validated,
    regionClass: result.region.class ?? null,
    regionValue: result.region.value ?? null,
    outcomeLabel: outcomeLabel(result.region.class, result.region.value),
    rows,
    visibleRows,
    hiddenCount: rows.length - visibleRows.length,
    stats: result.stats ?? null,
  };
}

export interface SetItemView {
  index: number;
  point: number[];
  sqDist: number;
  dist: number;
  nudged: boolean;
  outcomeLabel: string;
}

export interface SetView {
  kind: "set";
  count: number;
  items: SetItemView[];
  stats: StatsPayload | null;
}

export function buildSetView(state: ExplorerState): SetView | EmptyView {
  const payload = state.lastSet;
  if (payload === null) return { kind: "empty" };
  return {
    kind: "set",
    count: payload.count,
    items: payload.items.map((item, index) => ({
      index,
      point: item.point,
      sqDist: item.sq_dist,
      dist: item.dist,
      nudged: item.nudged,
      outcomeLabel: outcomeLabel(item.region.class, item.region.value),
    })),
    stats: payload.stats ?? null,
  };
}

export interface EvaluationView {
  kind: "evaluation";
  margin: number[];
  output: number[];
  klass: number | null;
  value: number | null;
  outcomeLabel: string;
}

export function buildEvaluationView(payload: EvaluationPayload | null): EvaluationView | EmptyView {
  if (payload === null) return { kind: "empty" };
  return {
    kind: "evaluation",
    margin: payload.margin,
    output: payload.output,
    klass: payload.class ?? null,
    value: payload.value ?? null,
    outcomeLabel: outcomeLabel(payload.class, payload.value),
  };
}

export function displayBound(b: Bound): string {
  return typeof b === "number" ? String(b) : b;
}

export function displayInterval(iv: WireInterval): string {
  return `[${displayBound(iv[0])}, ${displayBound(iv[1])})`;
}

const PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc949"];

function fillFor(klass: number | undefined): string {
  if (klass === undefined) return PALETTE[0] as string;
  return PALETTE[klass % PALETTE.length] as string;
}

export interface RectView {
  x: WireInterval;
  y: WireInterval;
  klass: number | null;
  value: number | null;
  score: number[];
  sqDist: number | null;
  fill: string;
  hover: string;
}

export interface LegendEntry {
  label: string;
  fill: string;
}

export interface ProjectionView {
  kind: "projection";
  dims: [number, number];
  dimNames: [string, string];
  total: number;
  shown: number;
  offset: number;
  point: [number, number];
  rects: RectView[];
  legend: LegendEntry[];
  empty: boolean;
}

/** Rectangle plot of the last projection response. Rect coordinates,
 * scores and distances are the server's values unchanged; only fill
 * colors and hover strings are added. */
export function buildProjectionView(
  state: ExplorerState,
  meta: ModelMetadataPayload | null
): ProjectionView | EmptyView {
  const payload = state.lastProjection;
  if (payload === null) return { kind: "empty" };
  const [di, dj] = payload.dims;
  const nameOf = (d: number) => state.features[d]?.name ?? `x${d}`;
  const rects: RectView[] = payload.rects.map((r) => {
    const label = outcomeLabel(r.class, r.value);
    const sq = r.sq_dist ?? null;
    const hover =
      `${nameOf(di)} ${displayInterval(r.x)}  ${nameOf(dj)} ${displayInterval(r.y)}` +
      `  ${label}` +
      (sq !== null ? `  sq_dist ${String(sq)}` : "");
    return {
      x: r.x,
      y: r.y,
      klass: r.class ?? null,
      value: r.value ?? null,
      score: r.score,
      sqDist: sq,
      fill: fillFor(r.class),
      hover,
    };
  });
  const legend: LegendEntry[] = [];
  if (meta !== null && meta.classes >= 2) {
    for (let k = 0; k < meta.classes; k += 1) {
      legend.push({ label: `class ${k}`, fill: fillFor(k) });
    }
  } else {
    legend.push({ label: "predicted value", fill: fillFor(undefined) });
  }
  return {
    kind: "projection",
    dims: payload.dims,
    dimNames: [nameOf(di), nameOf(dj)],
    total: payload.total,
    shown: rects.length,
    offset: state.pageOffset,
    point: payload.point,
    rects,
    legend,
    empty: rects.length === 0,
  };
}
