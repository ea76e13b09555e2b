/** Browser bootstrap: wires the DOM shell in index.html to an
 * ExplorerSession over fetchTransport. The service base URL comes from
 * the "service" query parameter and defaults to same-origin "/api". */

import type { Bound, CfTargetWire } from "./api.js";
import { renderBannerHtml, renderDeltaHtml, renderEvaluationHtml, renderProjectionHtml, renderSetHtml } from "./render.js";
import { ExplorerSession } from "./session.js";
import { decodeStateFragment } from "./state.js";
import { fetchTransport } from "./transport.js";
import { buildDeltaView, buildEvaluationView, buildProjectionView, buildSetView } from "./views.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function parseBound(text: string): Bound {
  const t = text.trim();
  if (t === "inf" || t === "-inf") return t;
  const v = Number(t);
  if (Number.isNaN(v)) throw new Error(`not a number or inf: ${text}`);
  return v;
}

function parseNum(text: string, label: string): number {
  const v = Number(text.trim());
  if (Number.isNaN(v)) throw new Error(`bad ${label}: ${text}`);
  return v;
}

function bootstrap(): void {
  const params = new URLSearchParams(location.search);
  const base = params.get("service") ?? "/api";
  let session: ExplorerSession;
  try {
    session = ExplorerSession.fromFragment(fetchTransport(base), location.hash);
  } catch {
    session = new ExplorerSession(fetchTransport(base));
  }

  const featureTable = el<HTMLTableElement>("features");
  const banner = el<HTMLDivElement>("banner");
  const resultPane = el<HTMLDivElement>("result");
  const evalPane = el<HTMLDivElement>("evaluation");
  const setPane = el<HTMLDivElement>("cfset");
  const projectionPane = el<HTMLDivElement>("projection");

  function renderFeatureRows(): void {
    const rows = session.state.features
      .map(
        (f, i) =>
          `<tr data-dim="${i}">` +
          `<th>${f.name.replace(/</g, "&lt;")}</th>` +
          `<td><input class="value" value="${String(f.value)}"></td>` +
          `<td><input class="pin" type="checkbox"${f.pinned ? " checked" : ""}></td>` +
          `<td><input class="weight" value="${String(f.weight)}"${f.pinned ? " disabled" : ""}></td>` +
          `</tr>`
      )
      .join("");
    featureTable.innerHTML =
      `<thead><tr><th>feature</th><th>value</th><th>pin</th><th>weight</th></tr></thead>` +
      `<tbody>${rows}</tbody>`;
    featureTable.querySelectorAll("tbody tr").forEach((tr) => {
      const dim = Number((tr as HTMLTableRowElement).dataset["dim"]);
      const value = tr.querySelector<HTMLInputElement>("input.value");
      const pin = tr.querySelector<HTMLInputElement>("input.pin");
      const weight = tr.querySelector<HTMLInputElement>("input.weight");
      value?.addEventListener("change", () => {
        session.setValue(dim, parseNum(value.value, "value"));
        syncFragment();
      });
      pin?.addEventListener("change", () => {
        session.setPinned(dim, pin.checked);
        if (weight) weight.disabled = pin.checked;
        syncFragment();
      });
      weight?.addEventListener("change", () => {
        session.setWeight(dim, parseNum(weight.value, "weight"));
        syncFragment();
      });
    });
  }

  function readTarget(): CfTargetWire | null {
    const kind = el<HTMLSelectElement>("target-kind").value;
    if (kind === "none") return null;
    if (kind === "class") {
      return { kind: "class", class: parseNum(el<HTMLInputElement>("target-class").value, "class") };
    }
    if (kind === "interval") {
      return {
        kind: "interval",
        low: parseBound(el<HTMLInputElement>("target-low").value),
        high: parseBound(el<HTMLInputElement>("target-high").value),
      };
    }
    return {
      kind: "threshold",
      epsilon: parseNum(el<HTMLInputElement>("target-epsilon").value, "epsilon"),
      side: el<HTMLSelectElement>("target-side").value === "ge" ? "ge" : "le",
    };
  }

  function readOptionals(): void {
    const radius = el<HTMLInputElement>("radius").value.trim();
    session.setRadius(radius === "" ? null : parseNum(radius, "radius"));
    const eps = el<HTMLInputElement>("epsilon-pred").value.trim();
    session.setEpsilonPred(eps === "" ? null : parseNum(eps, "epsilon_pred"));
    const dims = el<HTMLInputElement>("projection-dims").value.trim();
    if (dims === "") {
      session.setProjectionDims(null);
    } else {
      const [a, b] = dims.split(",").map((t) => parseNum(t, "dims"));
      session.setProjectionDims([a ?? 0, b ?? 1]);
    }
    const limit = el<HTMLInputElement>("page-limit").value.trim();
    session.setPage(session.state.pageOffset, limit === "" ? null : parseNum(limit, "limit"));
  }

  function paint(): void {
    banner.innerHTML = renderBannerHtml(session.banner);
    resultPane.innerHTML = renderDeltaHtml(buildDeltaView(session.state));
    evalPane.innerHTML = renderEvaluationHtml(buildEvaluationView(session.lastEvaluation));
    setPane.innerHTML = renderSetHtml(buildSetView(session.state));
    projectionPane.innerHTML = renderProjectionHtml(
      buildProjectionView(session.state, session.metadata)
    );
  }

  function syncFragment(): void {
    history.replaceState(null, "", `#${session.fragment()}`);
  }

  async function act(run: () => Promise<unknown>): Promise<void> {
    try {
      session.setTarget(readTarget());
      readOptionals();
      await run();
    } catch (exc) {
      session.banner = { kind: "error", message: exc instanceof Error ? exc.message : String(exc) };
    }
    paint();
    syncFragment();
  }

  el<HTMLButtonElement>("load").addEventListener("click", () =>
    act(async () => {
      const id = el<HTMLInputElement>("model-id").value.trim();
      await session.loadModel(id);
      renderFeatureRows();
    })
  );
  el<HTMLButtonElement>("run-query").addEventListener("click", () =>
    act(() => session.runQuery(el<HTMLInputElement>("with-stats").checked))
  );
  el<HTMLButtonElement>("run-evaluate").addEventListener("click", () => act(() => session.evaluate()));
  el<HTMLButtonElement>("run-set").addEventListener("click", () => act(() => session.runSet()));
  el<HTMLButtonElement>("run-projection").addEventListener("click", () =>
    act(() => session.runProjection())
  );
  el<HTMLButtonElement>("page-next").addEventListener("click", () =>
    act(() => {
      const step = session.state.pageLimit ?? 0;
      session.setPage(session.state.pageOffset + step, session.state.pageLimit);
      return session.runProjection();
    })
  );
  el<HTMLButtonElement>("page-prev").addEventListener("click", () =>
    act(() => {
      const step = session.state.pageLimit ?? 0;
      session.setPage(Math.max(0, session.state.pageOffset - step), session.state.pageLimit);
      return session.runProjection();
    })
  );
  el<HTMLInputElement>("show-unchanged").addEventListener("change", (ev) => {
    session.setShowUnchanged((ev.target as HTMLInputElement).checked);
    paint();
    syncFragment();
  });

  window.addEventListener("hashchange", () => {
    try {
      session.state = decodeStateFragment(location.hash);
      renderFeatureRows();
      paint();
    } catch {
      /* foreign fragment: leave the session as it is */
    }
  });

  renderFeatureRows();
  paint();
}

if (typeof document !== "undefined") bootstrap();
