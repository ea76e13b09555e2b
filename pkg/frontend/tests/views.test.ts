/** View building and markup: diffs highlight exactly the changed
 * features, hidden rows are counted, plots keep server coordinates, and
 * every displayed number is the raw response value. */

import { describe, expect, it } from "vitest";

import type { CfFoundPayload, ModelMetadataPayload, ProjectionPayload } from "../src/api.js";
import {
  renderBannerHtml,
  renderDeltaHtml,
  renderEvaluationHtml,
  renderProjectionHtml,
  renderSetHtml,
} from "../src/render.js";
import { emptyState, type ExplorerState } from "../src/state.js";
import {
  buildDeltaView,
  buildEvaluationView,
  buildProjectionView,
  buildSetView,
  displayInterval,
} from "../src/views.js";

function stumpState(): ExplorerState {
  const state = emptyState();
  state.modelId = "m";
  state.features = [{ name: "x0", value: 0, pinned: false, weight: 1 }];
  state.lastResult = {
    status: "ok",
    point: [2],
    sq_dist: 4,
    dist: 2,
    nudged: false,
    validated: true,
    region: {
      box: [[2, "inf"]],
      member_leaf_ids: [1, 3],
      margin: [-1, 1],
      score: [0.11, 0.88],
      class: 1,
    },
  } satisfies CfFoundPayload;
  return state;
}

describe("delta view", () => {
  it("the one-split recourse reads x0: 0 to 2", () => {
    const view = buildDeltaView(stumpState());
    expect(view.kind).toBe("result");
    if (view.kind !== "result") return;
    expect(view.rows).toStrictEqual([
      { index: 0, name: "x0", pinned: false, current: 0, recommended: 2, changed: true },
    ]);
    expect(view.visibleRows).toHaveLength(1);
    expect(view.outcomeLabel).toBe("class 1");
    const html = renderDeltaHtml(view);
    expect(html).toContain("distance 2 (squared 4) to class 1");
    expect(html).toContain("<td>0</td>");
    expect(html).toContain('<td class="changed">2</td>');
    expect(html).toContain("validated");
    expect(html).not.toContain("nudged");
  });

  it("unchanged features hide by default and count in the note", () => {
    const state = stumpState();
    state.features = [
      { name: "a", value: 1, pinned: false, weight: 1 },
      { name: "b", value: 2, pinned: true, weight: 1 },
      { name: "c", value: 3, pinned: false, weight: 1 },
    ];
    (state.lastResult as CfFoundPayload).point = [1, 2, 3.5];
    const view = buildDeltaView(state);
    if (view.kind !== "result") throw new Error(view.kind);
    expect(view.visibleRows.map((r) => r.name)).toStrictEqual(["c"]);
    expect(view.hiddenCount).toBe(2);
    expect(renderDeltaHtml(view)).toContain("2 unchanged features hidden");
    state.showUnchanged = true;
    const full = buildDeltaView(state);
    if (full.kind !== "result") throw new Error(full.kind);
    expect(full.visibleRows).toHaveLength(3);
    expect(full.hiddenCount).toBe(0);
  });

  it("an infeasible answer renders its reason", () => {
    const state = stumpState();
    state.lastResult = { status: "not_found", reason: "every region was pinned away" };
    const view = buildDeltaView(state);
    expect(view).toStrictEqual({ kind: "infeasible", reason: "every region was pinned away" });
    expect(renderDeltaHtml(view)).toContain("every region was pinned away");
  });

  it("no result yet renders a placeholder", () => {
    expect(renderDeltaHtml(buildDeltaView(emptyState()))).toContain("no query run yet");
  });

  it("stats render when the response carried them", () => {
    const state = stumpState();
    (state.lastResult as CfFoundPayload).stats = {
      explored_nodes: 42,
      leaves_considered: 7,
      elapsed: 0.015625,
      bound_log: [9, 4],
    };
    const view = buildDeltaView(state);
    if (view.kind !== "result") throw new Error(view.kind);
    expect(view.stats?.explored_nodes).toBe(42);
    const html = renderDeltaHtml(view);
    expect(html).toContain("explored 42 nodes");
    expect(html).toContain("considered 7 leaves");
    expect(html).toContain("0.015625s");
  });

  it("feature names are HTML-escaped", () => {
    const state = stumpState();
    state.features[0]!.name = "<script>alert(1)</script>";
    const view = buildDeltaView(state);
    const html = renderDeltaHtml(view);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("set view", () => {
  it("items pass through in server order", () => {
    const state = emptyState();
    state.features = [{ name: "x0", value: 0, pinned: false, weight: 1 }];
    state.lastSet = {
      status: "ok",
      count: 2,
      items: [
        {
          point: [0],
          sq_dist: 0,
          dist: 0,
          nudged: false,
          region: { box: [[0, 1]], member_leaf_ids: [0], margin: [1], score: [1], value: 1.5 },
        },
        {
          point: [2.25],
          sq_dist: 5.0625,
          dist: 2.25,
          nudged: true,
          region: { box: [[2, 3]], member_leaf_ids: [1], margin: [2], score: [2], value: 2.5 },
        },
      ],
    };
    const view = buildSetView(state);
    if (view.kind !== "set") throw new Error(view.kind);
    expect(view.count).toBe(2);
    expect(view.items[1]).toStrictEqual({
      index: 1,
      point: [2.25],
      sqDist: 5.0625,
      dist: 2.25,
      nudged: true,
      outcomeLabel: "value 2.5",
    });
    const html = renderSetHtml(view);
    expect(html).toContain("2 regions within the radius");
    expect(html).toContain("distance 2.25 (squared 5.0625) to value 2.5");
    expect(html).toContain("[nudged]");
  });
});

describe("evaluation view", () => {
  it("margins and outputs are verbatim", () => {
    const view = buildEvaluationView({ margin: [0.25, -0.75], output: [0.7310585786300049, 0.2689414213699951], class: 0 });
    if (view.kind !== "evaluation") throw new Error(view.kind);
    expect(view.margin).toStrictEqual([0.25, -0.75]);
    const html = renderEvaluationHtml(view);
    expect(html).toContain("prediction class 0");
    expect(html).toContain("0.7310585786300049");
  });
});

const meta: ModelMetadataPayload = {
  model_id: "m",
  dims: 3,
  classes: 2,
  num_trees: 4,
  num_leaves: 20,
  aggregation: { kind: "softmax-sum", base_score: 0 },
  feature_names: ["area", "lot", "rooms"],
};

function projectionState(payload: ProjectionPayload): ExplorerState {
  const state = emptyState();
  state.modelId = "m";
  state.features = meta.feature_names!.map((name) => ({
    name,
    value: 0,
    pinned: false,
    weight: 1,
  }));
  state.lastProjection = payload;
  return state;
}

describe("projection view", () => {
  it("one region is one rectangle at the server coordinates", () => {
    const payload: ProjectionPayload = {
      dims: [0, 1],
      total: 1,
      rects: [{ x: [1.5, 2.5], y: ["-inf", 0.5], class: 1, score: [0.2, 0.8], sq_dist: 2.25 }],
      point: [1, 0],
    };
    const view = buildProjectionView(projectionState(payload), meta);
    if (view.kind !== "projection") throw new Error(view.kind);
    expect(view.rects).toHaveLength(1);
    expect(view.rects[0]!.x).toStrictEqual([1.5, 2.5]);
    expect(view.rects[0]!.y).toStrictEqual(["-inf", 0.5]);
    expect(view.rects[0]!.klass).toBe(1);
    expect(view.rects[0]!.sqDist).toBe(2.25);
    expect(view.rects[0]!.hover).toContain("area [1.5, 2.5)");
    expect(view.rects[0]!.hover).toContain("lot [-inf, 0.5)");
    expect(view.rects[0]!.hover).toContain("sq_dist 2.25");
    expect(view.dimNames).toStrictEqual(["area", "lot"]);
    const html = renderProjectionHtml(view);
    expect(html).toContain("<svg");
    expect(html).toContain("area [1.5, 2.5)");
    expect(html).not.toContain("NaN");
  });

  it("an empty plot still shows the class legend", () => {
    const payload: ProjectionPayload = { dims: [0, 1], total: 0, rects: [], point: [0.5, -1] };
    const view = buildProjectionView(projectionState(payload), meta);
    if (view.kind !== "projection") throw new Error(view.kind);
    expect(view.empty).toBe(true);
    expect(view.legend.map((e) => e.label)).toStrictEqual(["class 0", "class 1"]);
    const html = renderProjectionHtml(view);
    expect(html).toContain("(none in range)");
    expect(html).toContain("class 0");
    expect(html).toContain("class 1");
    expect(html).toContain("showing 0 of 0 rectangles");
    expect(html).not.toContain("NaN");
  });

  it("a regression legend names the predicted value", () => {
    const payload: ProjectionPayload = {
      dims: [0, 2],
      total: 1,
      rects: [{ x: [0, 1], y: [0, 1], value: 4.5, score: [4.5] }],
      point: [0, 0],
    };
    const view = buildProjectionView(projectionState(payload), { ...meta, classes: 1 });
    if (view.kind !== "projection") throw new Error(view.kind);
    expect(view.legend).toHaveLength(1);
    expect(view.legend[0]!.label).toBe("predicted value");
    expect(view.rects[0]!.hover).toContain("value 4.5");
    expect(view.rects[0]!.sqDist).toBeNull();
  });

  it("intervals print half-open with raw bounds", () => {
    expect(displayInterval([2, "inf"])).toBe("[2, inf)");
    expect(displayInterval([-0.5, 0.25])).toBe("[-0.5, 0.25)");
  });
});

describe("banners", () => {
  it("budget banners include telemetry when present", () => {
    const html = renderBannerHtml({
      kind: "budget",
      message: "search exceeded its time budget",
      stats: { explored_nodes: 31, leaves_considered: null, elapsed: 0.25, bound_log: [] },
    });
    expect(html).toContain("search exceeded its time budget");
    expect(html).toContain("explored 31 nodes in 0.25s");
  });

  it("cap banners state the emitted count and the cap", () => {
    const html = renderBannerHtml({ kind: "cap", message: "too many regions", emitted: 9001, cap: 5000 });
    expect(html).toContain("9001 regions exceed the cap of 5000");
  });

  it("no banner renders nothing", () => {
    expect(renderBannerHtml(null)).toBe("");
  });
});
