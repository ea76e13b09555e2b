/** String renderers: view models to HTML / SVG markup.
 *
 * Displayed numbers are String() of the raw view values; the only
 * arithmetic here maps data coordinates onto the SVG canvas, and those
 * screen coordinates never appear as text. Unbounded rectangle edges are
 * clamped to the plot frame for drawing while hover text keeps "inf".
 */

import type { Bound } from "./api.js";
import type { Banner } from "./session.js";
import type {
  DeltaView,
  EmptyView,
  EvaluationView,
  ProjectionView,
  QueryView,
  SetView,
} from "./views.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const num = (v: number): string => escapeHtml(String(v));

export function renderBannerHtml(banner: Banner | null): string {
  if (banner === null) return "";
  if (banner.kind === "infeasible") {
    return `<div class="banner infeasible">infeasible: ${escapeHtml(banner.reason)}</div>`;
  }
  if (banner.kind === "budget") {
    const stats = banner.stats;
    const tail =
      stats === null
        ? ""
        : ` (explored ${num(stats.explored_nodes)} nodes in ${num(stats.elapsed)}s)`;
    return `<div class="banner budget">${escapeHtml(banner.message)}${tail}</div>`;
  }
  if (banner.kind === "cap") {
    return (
      `<div class="banner cap">${escapeHtml(banner.message)}: ` +
      `${num(banner.emitted)} regions exceed the cap of ${num(banner.cap)}; ` +
      `narrow the radius or page the projection</div>`
    );
  }
  return `<div class="banner error">${escapeHtml(banner.message)}</div>`;
}

function statsLine(view: DeltaView): string {
  const stats = view.stats;
  if (stats === null) return "";
  const leaves = stats.leaves_considered === null ? "all" : num(stats.leaves_considered);
  return (
    `<p class="stats">explored ${num(stats.explored_nodes)} nodes, ` +
    `considered ${leaves} leaves, ${num(stats.elapsed)}s</p>`
  );
}

/** Two-row diff table: one column per visible feature, a "current" row
 * and a "recommended" row; changed columns are marked. */
export function renderDeltaHtml(view: QueryView): string {
  if (view.kind === "empty") {
    return `<div class="delta empty">no query run yet</div>`;
  }
  if (view.kind === "infeasible") {
    return renderBannerHtml({ kind: "infeasible", reason: view.reason });
  }
  const cols = view.visibleRows;
  const flags = [view.nudged ? "nudged" : "", view.validated ? "validated" : ""]
    .filter((f) => f !== "")
    .join(", ");
  const summary =
    `<p class="summary">distance ${num(view.dist)} ` +
    `(squared ${num(view.sqDist)}) to ${escapeHtml(view.outcomeLabel)}` +
    (flags === "" ? "" : ` [${flags}]`) +
    `</p>`;
  const head = cols
    .map((r) => `<th${r.pinned ? ' class="pinned"' : ""}>${escapeHtml(r.name)}</th>`)
    .join("");
  const currentCells = cols.map((r) => `<td>${num(r.current)}</td>`).join("");
  const recommendedCells = cols
    .map((r) => `<td${r.changed ? ' class="changed"' : ""}>${num(r.recommended)}</td>`)
    .join("");
  const note =
    view.hiddenCount > 0
      ? `<p class="hidden-note">${num(view.hiddenCount)} unchanged ` +
        `feature${view.hiddenCount === 1 ? "" : "s"} hidden</p>`
      : "";
  return (
    `<div class="delta">${summary}` +
    `<table><thead><tr><th></th>${head}</tr></thead><tbody>` +
    `<tr class="current"><th>current</th>${currentCells}</tr>` +
    `<tr class="recommended"><th>recommended</th>${recommendedCells}</tr>` +
    `</tbody></table>${note}${statsLine(view)}</div>`
  );
}

export function renderSetHtml(view: SetView | EmptyView): string {
  if (view.kind === "empty") {
    return `<div class="cfset empty">no set query run yet</div>`;
  }
  const items = view.items
    .map(
      (item) =>
        `<li>distance ${num(item.dist)} (squared ${num(item.sqDist)}) to ` +
        `${escapeHtml(item.outcomeLabel)} at [${item.point.map(num).join(", ")}]` +
        (item.nudged ? " [nudged]" : "") +
        `</li>`
    )
    .join("");
  return (
    `<div class="cfset"><p class="summary">${num(view.count)} ` +
    `region${view.count === 1 ? "" : "s"} within the radius</p><ol>${items}</ol></div>`
  );
}

export function renderEvaluationHtml(view: EvaluationView | EmptyView): string {
  if (view.kind === "empty") return `<div class="evaluation empty"></div>`;
  return (
    `<div class="evaluation">prediction ${escapeHtml(view.outcomeLabel)}; ` +
    `margin [${view.margin.map(num).join(", ")}]; ` +
    `output [${view.output.map(num).join(", ")}]</div>`
  );
}

interface Frame {
  lo: [number, number];
  hi: [number, number];
}

function finiteSpan(values: number[]): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = (hi - lo) * 0.05;
  return [lo - pad, hi + pad];
}

function frameFor(view: ProjectionView): Frame {
  const xs: number[] = [view.point[0]];
  const ys: number[] = [view.point[1]];
  for (const r of view.rects) {
    for (const b of r.x) if (typeof b === "number") xs.push(b);
    for (const b of r.y) if (typeof b === "number") ys.push(b);
  }
  const [xlo, xhi] = finiteSpan(xs);
  const [ylo, yhi] = finiteSpan(ys);
  return { lo: [xlo, ylo], hi: [xhi, yhi] };
}

const WIDTH = 480;
const HEIGHT = 360;

function clampBound(b: Bound, lo: number, hi: number): number {
  const v = b === "inf" ? hi : b === "-inf" ? lo : b;
  return Math.min(hi, Math.max(lo, v));
}

export function renderProjectionHtml(view: ProjectionView | EmptyView): string {
  if (view.kind === "empty") {
    return `<div class="projection empty">no projection run yet</div>`;
  }
  const frame = frameFor(view);
  const sx = (v: number) =>
    ((v - frame.lo[0]) / (frame.hi[0] - frame.lo[0])) * WIDTH;
  const sy = (v: number) =>
    HEIGHT - ((v - frame.lo[1]) / (frame.hi[1] - frame.lo[1])) * HEIGHT;
  const rects = view.rects
    .map((r) => {
      const x0 = clampBound(r.x[0], frame.lo[0], frame.hi[0]);
      const x1 = clampBound(r.x[1], frame.lo[0], frame.hi[0]);
      const y0 = clampBound(r.y[0], frame.lo[1], frame.hi[1]);
      const y1 = clampBound(r.y[1], frame.lo[1], frame.hi[1]);
      return (
        `<rect x="${sx(x0)}" y="${sy(y1)}" width="${sx(x1) - sx(x0)}" ` +
        `height="${sy(y0) - sy(y1)}" fill="${r.fill}" fill-opacity="0.55" ` +
        `stroke="#333" stroke-width="0.5">` +
        `<title>${escapeHtml(r.hover)}</title></rect>`
      );
    })
    .join("");
  const px = sx(view.point[0]);
  const py = sy(view.point[1]);
  const marker =
    `<circle cx="${px}" cy="${py}" r="4" fill="#000">` +
    `<title>query point (${num(view.point[0])}, ${num(view.point[1])})</title></circle>`;
  const legend = view.legend
    .map(
      (e) =>
        `<li><span class="swatch" style="background:${e.fill}"></span>` +
        `${escapeHtml(e.label)}</li>`
    )
    .join("");
  const caption =
    `<p class="caption">${escapeHtml(view.dimNames[0])} vs ` +
    `${escapeHtml(view.dimNames[1])}: showing ${num(view.shown)} of ` +
    `${num(view.total)} rectangles` +
    (view.offset > 0 ? ` from offset ${num(view.offset)}` : "") +
    (view.empty ? " (none in range)" : "") +
    `</p>`;
  return (
    `<div class="projection">${caption}` +
    `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" width="${WIDTH}" height="${HEIGHT}" ` +
    `role="img">${rects}${marker}</svg>` +
    `<ul class="legend">${legend}</ul></div>`
  );
}
