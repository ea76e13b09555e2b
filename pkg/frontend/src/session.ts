/** Explorer session: one mutable ExplorerState plus the request loop.
 *
 * A session keeps at most one request in flight; submitting a new action
 * aborts the pending one, and a response that lost the race is discarded
 * even if its transport promise settles later. Errors surface as a banner
 * without touching the state that produced them.
 */

import type {
  CfResponseBody,
  CfSetPayload,
  CfTargetWire,
  ErrorPayload,
  EvaluationPayload,
  ModelMetadataPayload,
  ProjectionPayload,
  StatsPayload,
} from "./api.js";
import { cfBody, evaluateBody, projectionPath, setBody } from "./query.js";
import {
  decodeStateFragment,
  emptyState,
  encodeStateFragment,
  featureTableFor,
  type ExplorerState,
} from "./state.js";
import type { Transport, TransportRequest, TransportResponse } from "./transport.js";

export type { CfTargetWire };

export type Banner =
  | { kind: "infeasible"; reason: string }
  | { kind: "budget"; message: string; stats: StatsPayload | null }
  | { kind: "cap"; message: string; emitted: number; cap: number }
  | { kind: "error"; message: string };

/** applied: the action's outcome landed in the session (including an
 * infeasible answer). failed: an error banner was raised instead.
 * superseded: a newer action won the race and this one was dropped. */
export type ActionOutcome = "applied" | "failed" | "superseded";

type Dispatched =
  | { outcome: "done"; resp: TransportResponse }
  | { outcome: "failed"; error: unknown }
  | { outcome: "superseded" };

export class ExplorerSession {
  state: ExplorerState;
  banner: Banner | null = null;
  metadata: ModelMetadataPayload | null = null;
  lastEvaluation: EvaluationPayload | null = null;

  private readonly transport: Transport;
  private seq = 0;
  private controller: AbortController | null = null;

  constructor(transport: Transport, state: ExplorerState = emptyState()) {
    this.transport = transport;
    this.state = state;
  }

  static fromFragment(transport: Transport, fragment: string): ExplorerSession {
    return new ExplorerSession(transport, decodeStateFragment(fragment));
  }

  fragment(): string {
    return encodeStateFragment(this.state);
  }

  setValue(dim: number, value: number): void {
    this.row(dim).value = value;
  }

  setPinned(dim: number, pinned: boolean): void {
    this.row(dim).pinned = pinned;
  }

  setWeight(dim: number, weight: number): void {
    this.row(dim).weight = weight;
  }

  setTarget(target: CfTargetWire | null): void {
    this.state.target = target;
  }

  setRadius(radius: number | null): void {
    this.state.radius = radius;
  }

  setEpsilonPred(epsilon: number | null): void {
    this.state.epsilonPred = epsilon;
  }

  setProjectionDims(dims: [number, number] | null): void {
    this.state.projectionDims = dims;
  }

  setPage(offset: number, limit: number | null): void {
    this.state.pageOffset = offset;
    this.state.pageLimit = limit;
  }

  setShowUnchanged(show: boolean): void {
    this.state.showUnchanged = show;
  }

  async loadModel(modelId: string): Promise<ActionOutcome> {
    const d = await this.dispatch({ method: "GET", path: `/models/${modelId}` });
    if (d.outcome !== "done") return this.reportTransport(d);
    if (d.resp.status !== 200) return this.reportHttp(d.resp);
    const meta = d.resp.body as ModelMetadataPayload;
    this.metadata = meta;
    this.state.modelId = meta.model_id;
    if (this.state.features.length !== meta.dims) {
      this.state.features = featureTableFor(meta);
    }
    this.banner = null;
    return "applied";
  }

  async runQuery(stats = false): Promise<ActionOutcome> {
    const d = await this.dispatch({
      method: "POST",
      path: `/models/${this.requireModel()}/cf`,
      body: cfBody(this.state, stats),
    });
    if (d.outcome !== "done") return this.reportTransport(d);
    const { status, body } = d.resp;
    if (status === 200) {
      this.state.lastResult = body as CfResponseBody;
      this.banner = null;
      return "applied";
    }
    if (status === 422) {
      const answer = body as CfResponseBody & { reason?: string };
      this.state.lastResult = answer;
      this.banner = {
        kind: "infeasible",
        reason: answer.reason ?? "target unreachable",
      };
      return "applied";
    }
    return this.reportHttp(d.resp);
  }

  async runSet(stats = false): Promise<ActionOutcome> {
    const d = await this.dispatch({
      method: "POST",
      path: `/models/${this.requireModel()}/cfset`,
      body: setBody(this.state, stats),
    });
    if (d.outcome !== "done") return this.reportTransport(d);
    if (d.resp.status !== 200) return this.reportHttp(d.resp);
    this.state.lastSet = d.resp.body as CfSetPayload;
    this.banner = null;
    return "applied";
  }

  async runProjection(): Promise<ActionOutcome> {
    const d = await this.dispatch({ method: "GET", path: projectionPath(this.state) });
    if (d.outcome !== "done") return this.reportTransport(d);
    if (d.resp.status !== 200) return this.reportHttp(d.resp);
    this.state.lastProjection = d.resp.body as ProjectionPayload;
    this.banner = null;
    return "applied";
  }

  async evaluate(): Promise<ActionOutcome> {
    const d = await this.dispatch({
      method: "POST",
      path: `/models/${this.requireModel()}/evaluate`,
      body: evaluateBody(this.state),
    });
    if (d.outcome !== "done") return this.reportTransport(d);
    if (d.resp.status !== 200) return this.reportHttp(d.resp);
    this.lastEvaluation = d.resp.body as EvaluationPayload;
    this.banner = null;
    return "applied";
  }

  private row(dim: number) {
    const row = this.state.features[dim];
    if (row === undefined) throw new Error(`feature ${dim} out of range`);
    return row;
  }

  private requireModel(): string {
    if (this.state.modelId === null) throw new Error("no model loaded");
    return this.state.modelId;
  }

  private async dispatch(req: Omit<TransportRequest, "signal">): Promise<Dispatched> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    this.seq += 1;
    const ticket = this.seq;
    try {
      const resp = await this.transport({ ...req, signal: controller.signal });
      if (ticket !== this.seq) return { outcome: "superseded" };
      return { outcome: "done", resp };
    } catch (error) {
      if (ticket !== this.seq) return { outcome: "superseded" };
      return { outcome: "failed", error };
    }
  }

  private reportTransport(d: Dispatched): ActionOutcome {
    if (d.outcome === "superseded") return "superseded";
    if (d.outcome === "failed") {
      const msg = d.error instanceof Error ? d.error.message : String(d.error);
      this.banner = { kind: "error", message: msg };
      return "failed";
    }
    return "applied";
  }

  private reportHttp(resp: TransportResponse): ActionOutcome {
    const body = (resp.body ?? {}) as Partial<ErrorPayload>;
    const message = body.error ?? `HTTP ${resp.status}`;
    if (resp.status === 503) {
      this.banner = { kind: "budget", message, stats: body.stats ?? null };
    } else if (resp.status === 413) {
      this.banner = {
        kind: "cap",
        message,
        emitted: body.emitted ?? 0,
        cap: body.cap ?? 0,
      };
    } else {
      this.banner = { kind: "error", message };
    }
    return "failed";
  }
}
