/** Explorer session state and its URL-fragment serialization.
 *
 * The whole state, including the last service responses, round-trips
 * through the fragment so a session can be shared or reloaded: decode of
 * an encoded state yields a deep-equal state. Fields use null, never
 * undefined, so JSON serialization is lossless.
 */

import { z } from "zod";

import type {
  CfResponseBody,
  CfSetPayload,
  CfTargetWire,
  ModelMetadataPayload,
  ProjectionPayload,
} from "./api.js";

export interface FeatureRow {
  name: string;
  value: number;
  pinned: boolean;
  /** Ignored while pinned: the query sends weight 1 for pinned dims. */
  weight: number;
}

export interface ExplorerState {
  modelId: string | null;
  features: FeatureRow[];
  target: CfTargetWire | null;
  radius: number | null;
  epsilonPred: number | null;
  projectionDims: [number, number] | null;
  pageOffset: number;
  pageLimit: number | null;
  showUnchanged: boolean;
  lastResult: CfResponseBody | null;
  lastSet: CfSetPayload | null;
  lastProjection: ProjectionPayload | null;
}

const bound = z.union([z.number(), z.literal("inf"), z.literal("-inf")]);
const interval = z.tuple([bound, bound]);

const targetSchema = z.discriminatedUnion("kind", [
  z.strictObject({ kind: z.literal("class"), class: z.int() }),
  z.strictObject({
    kind: z.literal("threshold"),
    epsilon: z.number(),
    side: z.enum(["le", "ge"]),
  }),
  z.strictObject({ kind: z.literal("interval"), low: bound, high: bound }),
]);

const regionSchema = z.strictObject({
  box: z.array(interval),
  member_leaf_ids: z.array(z.int()),
  margin: z.array(z.number()),
  score: z.array(z.number()),
  class: z.int().optional(),
  value: z.number().optional(),
});

const statsSchema = z.strictObject({
  explored_nodes: z.int(),
  leaves_considered: z.int().nullable(),
  elapsed: z.number(),
  bound_log: z.array(z.number()),
});

const cfResponseSchema = z.discriminatedUnion("status", [
  z.strictObject({
    status: z.literal("ok"),
    point: z.array(z.number()),
    sq_dist: z.number(),
    dist: z.number(),
    nudged: z.boolean(),
    validated: z.boolean(),
    region: regionSchema,
    stats: statsSchema.optional(),
  }),
  z.strictObject({
    status: z.literal("not_found"),
    reason: z.string().optional(),
    stats: statsSchema.optional(),
  }),
]);

const setSchema = z.strictObject({
  status: z.literal("ok"),
  count: z.int(),
  items: z.array(
    z.strictObject({
      point: z.array(z.number()),
      sq_dist: z.number(),
      dist: z.number(),
      nudged: z.boolean(),
      region: regionSchema,
    })
  ),
  stats: statsSchema.optional(),
});

const projectionSchema = z.strictObject({
  dims: z.tuple([z.int(), z.int()]),
  total: z.int(),
  rects: z.array(
    z.strictObject({
      x: interval,
      y: interval,
      class: z.int().optional(),
      value: z.number().optional(),
      score: z.array(z.number()),
      sq_dist: z.number().optional(),
    })
  ),
  point: z.tuple([z.number(), z.number()]),
});

export const explorerStateSchema = z.strictObject({
  modelId: z.string().nullable(),
  features: z.array(
    z.strictObject({
      name: z.string(),
      value: z.number(),
      pinned: z.boolean(),
      weight: z.number(),
    })
  ),
  target: targetSchema.nullable(),
  radius: z.number().nullable(),
  epsilonPred: z.number().nullable(),
  projectionDims: z.tuple([z.int(), z.int()]).nullable(),
  pageOffset: z.int(),
  pageLimit: z.int().nullable(),
  showUnchanged: z.boolean(),
  lastResult: cfResponseSchema.nullable(),
  lastSet: setSchema.nullable(),
  lastProjection: projectionSchema.nullable(),
});

export function emptyState(): ExplorerState {
  return {
    modelId: null,
    features: [],
    target: null,
    radius: null,
    epsilonPred: null,
    projectionDims: null,
    pageOffset: 0,
    pageLimit: null,
    showUnchanged: false,
    lastResult: null,
    lastSet: null,
    lastProjection: null,
  };
}

/** Fresh feature table for a loaded model: server names when present,
 * x0..x{D-1} otherwise; values 0, nothing pinned, every weight 1. */
export function featureTableFor(meta: ModelMetadataPayload): FeatureRow[] {
  const rows: FeatureRow[] = [];
  for (let i = 0; i < meta.dims; i += 1) {
    rows.push({
      name: meta.feature_names?.[i] ?? `x${i}`,
      value: 0,
      pinned: false,
      weight: 1,
    });
  }
  return rows;
}

const FRAGMENT_KEY = "s=";

/** Serialize state into a URL fragment (without the leading "#"). */
export function encodeStateFragment(state: ExplorerState): string {
  return FRAGMENT_KEY + encodeURIComponent(JSON.stringify(state));
}

export class FragmentError extends Error {}

/** Parse a fragment produced by encodeStateFragment; accepts an optional
 * leading "#". Malformed input raises FragmentError. */
export function decodeStateFragment(fragment: string): ExplorerState {
  const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (!raw.startsWith(FRAGMENT_KEY)) {
    throw new FragmentError("fragment does not carry explorer state");
  }
  let doc: unknown;
  try {
    doc = JSON.parse(decodeURIComponent(raw.slice(FRAGMENT_KEY.length)));
  } catch (exc) {
    throw new FragmentError(`unreadable state fragment: ${String(exc)}`);
  }
  const parsed = explorerStateSchema.safeParse(doc);
  if (!parsed.success) {
    throw new FragmentError(`invalid state fragment: ${parsed.error.message}`);
  }
  return parsed.data as ExplorerState;
}
