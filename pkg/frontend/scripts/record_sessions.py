"""Record golden HTTP sessions for the explorer test suite.

Drives the real service in-process through the same request shapes the
explorer builds (the Mirror class mirrors frontend/src/query.ts rule for
rule) and writes every request/response pair to
tests/fixtures/sessions.json. The vitest suite replays those sessions
through a scripted transport, asserting both that the explorer emits
byte-identical requests and that its rendered views carry the recorded
response values verbatim.

Run from the repository root with the Python package installed:

    python3 frontend/scripts/record_sessions.py
"""

import json
import warnings
from pathlib import Path
from urllib.parse import urlencode

warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")

from fastapi.testclient import TestClient

from boxcf import RandomModelSpec, EnsembleModel, evaluate, generate_model, ingest
from boxcf.service import create_app

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "sessions.json"


def js_num(v) -> str:
    """Format a number the way JavaScript String(v) does; the recorded
    projection paths must match the explorer's byte for byte."""
    f = float(v)
    if f != f or f in (float("inf"), float("-inf")):
        raise ValueError("non-finite URL parameter")
    if f == int(f) and abs(f) < 2**53:
        return str(int(f))
    text = repr(f)
    if "e" in text or "E" in text:
        raise ValueError(f"exponent formatting differs across languages: {text}")
    return text


def bound_text(b) -> str:
    return b if isinstance(b, str) else js_num(b)


class Mirror:
    """Python twin of the explorer's state-to-wire mapping."""

    def __init__(self):
        self.model_id = None
        self.values: list = []
        self.pinned: list = []
        self.weights: list = []
        self.target = None
        self.radius = None
        self.epsilon_pred = None
        self.proj_dims = None
        self.page_offset = 0
        self.page_limit = None

    def load(self, meta: dict) -> None:
        self.model_id = meta["model_id"]
        if len(self.values) != meta["dims"]:
            self.values = [0] * meta["dims"]
            self.pinned = [False] * meta["dims"]
            self.weights = [1] * meta["dims"]

    def apply(self, patch: dict) -> None:
        for k, v in patch.get("values", {}).items():
            self.values[int(k)] = v
        for d in patch.get("pin", []):
            self.pinned[d] = True
        for d in patch.get("unpin", []):
            self.pinned[d] = False
        for k, v in patch.get("weights", {}).items():
            self.weights[int(k)] = v
        if "target" in patch:
            self.target = patch["target"]
        if "radius" in patch:
            self.radius = patch["radius"]
        if "epsilonPred" in patch:
            self.epsilon_pred = patch["epsilonPred"]
        if "dims" in patch:
            self.proj_dims = patch["dims"]
        if "page" in patch:
            self.page_offset, self.page_limit = patch["page"]

    def effective_weights(self) -> list:
        return [1 if p else w for p, w in zip(self.pinned, self.weights)]

    def cf_body(self, stats: bool = False) -> dict:
        body: dict = {"x": list(self.values)}
        if self.target is not None:
            body["target"] = self.target
        fixed = [i for i, p in enumerate(self.pinned) if p]
        if fixed:
            body["fixed_dims"] = fixed
        w = self.effective_weights()
        if any(v != 1 for v in w):
            body["weights"] = w
        if stats:
            body["stats"] = True
        return body

    def set_body(self, stats: bool = False) -> dict:
        body = self.cf_body(stats)
        if self.radius is not None:
            body["radius"] = self.radius
        if self.epsilon_pred is not None:
            body["epsilon_pred"] = self.epsilon_pred
        return body

    def projection_path(self) -> str:
        pairs = [
            ("dims", ",".join(js_num(d) for d in self.proj_dims)),
            ("x", ",".join(js_num(v) for v in self.values)),
        ]
        if self.radius is not None:
            pairs.append(("radius", js_num(self.radius)))
        t = self.target
        if t is not None:
            if t["kind"] == "class":
                pairs.append(("class", js_num(t["class"])))
            elif t["kind"] == "interval":
                pairs.append(("interval", f"{bound_text(t['low'])}:{bound_text(t['high'])}"))
            else:
                pairs.append(("epsilon", js_num(t["epsilon"])))
                pairs.append(("side", t["side"]))
        elif self.epsilon_pred is not None:
            pairs.append(("epsilon", js_num(self.epsilon_pred)))
        for i, p in enumerate(self.pinned):
            if p:
                pairs.append(("fix", f"{i}:{js_num(self.values[i])}"))
        for i, w in enumerate(self.effective_weights()):
            if w != 1:
                pairs.append(("weight", f"{i}:{js_num(w)}"))
        if self.page_offset != 0:
            pairs.append(("offset", js_num(self.page_offset)))
        if self.page_limit is not None:
            pairs.append(("limit", js_num(self.page_limit)))
        return f"/models/{self.model_id}/projection?{urlencode(pairs)}"


class Recorder:
    def __init__(self, client: TestClient, name: str):
        self.client = client
        self.name = name
        self.mirror = Mirror()
        self.steps: list = []

    def _run(self, action: str, patch: dict, method: str, path: str, body=None):
        request: dict = {"method": method, "path": path}
        if method == "GET":
            resp = self.client.get(path)
        else:
            request["body"] = body
            resp = self.client.post(path, json=body)
        self.steps.append(
            {
                "patch": patch,
                "action": action,
                "request": request,
                "response": {"status": resp.status_code, "body": resp.json()},
            }
        )
        return resp.status_code, resp.json()

    def load(self, model_id: str, patch: dict | None = None):
        patch = patch or {}
        self.mirror.apply(patch)
        status, body = self._run("load", patch, "GET", f"/models/{model_id}")
        if status == 200:
            self.mirror.load(body)
        return status, body

    def cf(self, patch: dict | None = None):
        patch = patch or {}
        self.mirror.apply(patch)
        stats = bool(patch.get("stats"))
        body = self.mirror.cf_body(stats)
        return self._run("cf", patch, "POST", f"/models/{self.mirror.model_id}/cf", body)

    def cfset(self, patch: dict | None = None):
        patch = patch or {}
        self.mirror.apply(patch)
        stats = bool(patch.get("stats"))
        body = self.mirror.set_body(stats)
        return self._run(
            "cfset", patch, "POST", f"/models/{self.mirror.model_id}/cfset", body
        )

    def evaluate(self, patch: dict | None = None):
        patch = patch or {}
        self.mirror.apply(patch)
        body = {"x": list(self.mirror.values)}
        return self._run(
            "evaluate", patch, "POST", f"/models/{self.mirror.model_id}/evaluate", body
        )

    def projection(self, patch: dict | None = None):
        patch = patch or {}
        self.mirror.apply(patch)
        return self._run("projection", patch, "GET", self.mirror.projection_path())

    def done(self) -> dict:
        return {"name": self.name, "steps": self.steps}


def stump_model() -> EnsembleModel:
    """One split at x0 = 2: class 0 wins below, class 1 at and above."""
    dump = [
        {
            "nodeid": 0, "split": "f0", "split_condition": 2.0, "yes": 1, "no": 2,
            "children": [{"nodeid": 1, "leaf": 1.0}, {"nodeid": 2, "leaf": -1.0}],
        },
        {
            "nodeid": 0, "split": "f0", "split_condition": 2.0, "yes": 1, "no": 2,
            "children": [{"nodeid": 1, "leaf": -1.0}, {"nodeid": 2, "leaf": 1.0}],
        },
    ]
    return ingest(dump, classes=2)


def with_names(model: EnsembleModel, names: list) -> EnsembleModel:
    doc = model.to_dict()
    doc["feature_names"] = names
    return EnsembleModel.from_dict(doc)


def current_class(model: EnsembleModel, values: list) -> int:
    _, decision = evaluate(model, values)
    return int(decision)


def current_value(model: EnsembleModel, values: list) -> float:
    _, decision = evaluate(model, values)
    return float(decision)


def main() -> None:
    app = create_app()
    client = TestClient(app)
    strict_app = create_app(time_budget=0.0)
    strict_client = TestClient(strict_app)

    stump = stump_model()
    credit = with_names(
        generate_model(
            RandomModelSpec(
                seed=301, dims=5, classes=2, num_trees=12, min_depth=2,
                max_depth=4, aggregation="softmax-sum",
            )
        ),
        ["age", "income", "debt", "accounts", "tenure"],
    )
    house = with_names(
        generate_model(
            RandomModelSpec(seed=302, dims=3, classes=1, num_trees=10, min_depth=2, max_depth=3)
        ),
        ["area", "lot", "rooms"],
    )
    logit = generate_model(
        RandomModelSpec(
            seed=303, dims=2, classes=1, num_trees=8, min_depth=1, max_depth=3,
            aggregation="logistic-sum",
        )
    )

    ids = {}
    for key, model in (("stump", stump), ("credit", credit), ("house", house), ("logit", logit)):
        resp = client.post("/models", json=model.to_dict())
        assert resp.status_code == 200, resp.text
        ids[key] = resp.json()["model_id"]
    resp = strict_client.post("/models", json=credit.to_dict())
    assert resp.status_code == 200 and resp.json()["model_id"] == ids["credit"]

    credit_values = {"0": 1.5, "1": -0.5, "2": 2.25, "3": 0.5, "4": -1.25}
    credit_x = [1.5, -0.5, 2.25, 0.5, -1.25]
    credit_flip = 1 - current_class(credit, credit_x)
    house_values = {"0": 0.5, "1": -1, "2": 2}
    house_x = [0.5, -1.0, 2.0]
    house_v = current_value(house, house_x)

    sessions = []

    # 1: the one-split recourse staple: move x0 from 0 to the boundary.
    r = Recorder(client, "stump-recourse")
    r.load(ids["stump"])
    status, body = r.evaluate()
    assert status == 200 and body["class"] == 0
    status, body = r.cf({"target": {"kind": "class", "class": 1}})
    assert status == 200 and body["point"] == [2.0] and body["dist"] == 2.0
    sessions.append(r.done())

    # 2: pinning the only separating feature makes the target infeasible.
    r = Recorder(client, "stump-pin-infeasible")
    r.load(ids["stump"])
    status, body = r.cf({"target": {"kind": "class", "class": 1}, "pin": [0]})
    assert status == 422 and body["status"] == "not_found" and body["reason"]
    sessions.append(r.done())

    # 3: evaluate, then ask for the opposite class.
    r = Recorder(client, "credit-flip")
    r.load(ids["credit"])
    status, body = r.evaluate({"values": credit_values})
    assert status == 200 and body["class"] == 1 - credit_flip
    status, body = r.cf({"target": {"kind": "class", "class": credit_flip}})
    assert status == 200 and body["status"] == "ok"
    base_sq = body["sq_dist"]
    sessions.append(r.done())

    # 4: pinning uncontrollable features can only push the answer further.
    r = Recorder(client, "credit-restricted")
    r.load(ids["credit"])
    status, body = r.cf({"values": credit_values, "target": {"kind": "class", "class": credit_flip}})
    assert status == 200
    status, body = r.cf({"pin": [1, 3]})
    assert status == 200 and body["sq_dist"] >= base_sq
    sessions.append(r.done())

    # 5: pin then unpin; the final query must equal a fresh session's.
    r = Recorder(client, "credit-pin-unpin")
    r.load(ids["credit"])
    status, _ = r.cf({"values": credit_values, "pin": [2], "target": {"kind": "class", "class": credit_flip}})
    assert status == 200
    status, body = r.cf({"unpin": [2]})
    assert status == 200 and body["sq_dist"] == base_sq
    sessions.append(r.done())

    # 6: a heavy weight steers the answer away from that feature.
    r = Recorder(client, "credit-weighted")
    r.load(ids["credit"])
    status, body = r.cf(
        {"values": credit_values, "weights": {"0": 100}, "target": {"kind": "class", "class": credit_flip}}
    )
    assert status == 200
    sessions.append(r.done())

    # 7: run statistics attached on request only.
    r = Recorder(client, "credit-stats")
    r.load(ids["credit"])
    status, body = r.cf(
        {"values": credit_values, "target": {"kind": "class", "class": credit_flip}, "stats": True}
    )
    assert status == 200 and "stats" in body and body["stats"]["explored_nodes"] >= 1
    sessions.append(r.done())

    # 8: regression model, score interval above the current prediction.
    r = Recorder(client, "house-interval")
    r.load(ids["house"])
    status, body = r.evaluate({"values": house_values})
    assert status == 200 and body["value"] == house_v
    status, body = r.cf({"target": {"kind": "interval", "low": house_v + 0.2, "high": "inf"}})
    assert status == 200, body
    sessions.append(r.done())

    # 9: an interval no leaf combination can reach.
    r = Recorder(client, "house-impossible")
    r.load(ids["house"])
    status, body = r.cf({"values": house_values, "target": {"kind": "interval", "low": 1000000, "high": "inf"}})
    assert status == 422 and body["reason"]
    sessions.append(r.done())

    # 10: prediction band around f(x) as a set query.
    r = Recorder(client, "house-epsilon-band")
    r.load(ids["house"])
    status, body = r.cfset({"values": house_values, "epsilonPred": 0.25, "radius": 4})
    assert status == 200 and body["count"] >= 1 and body["items"][0]["sq_dist"] == 0.0
    sessions.append(r.done())

    # 11: nothing within a tiny radius; the plot stays empty but legible.
    r = Recorder(client, "house-set-empty")
    r.load(ids["house"])
    status, body = r.cfset(
        {
            "values": house_values,
            "target": {"kind": "interval", "low": house_v + 0.2, "high": "inf"},
            "radius": 0.001,
        }
    )
    assert status == 200 and body["count"] == 0
    status, body = r.projection({"dims": [0, 1]})
    assert status == 200 and body["total"] == 0 and body["rects"] == []
    sessions.append(r.done())

    # 12: logistic model, probability threshold target.
    r = Recorder(client, "logit-threshold")
    r.load(ids["logit"])
    status, body = r.evaluate({"values": {"0": 0.5, "1": -0.5}})
    assert status == 200
    prob = body["output"][0]
    side = "ge" if prob < 0.7 else "le"
    status, body = r.cf({"target": {"kind": "threshold", "epsilon": 0.7, "side": side}})
    assert status == 200, body
    sessions.append(r.done())

    # 13: counterfactual first, then the neighbourhood at twice the distance.
    r = Recorder(client, "projection-basic")
    r.load(ids["credit"])
    status, body = r.cf({"values": credit_values, "target": {"kind": "class", "class": credit_flip}})
    assert status == 200
    radius13 = round(4 * base_sq, 6)
    status, body = r.projection({"dims": [0, 1], "radius": radius13})
    assert status == 200 and body["total"] >= 1 and len(body["rects"]) == body["total"]
    sessions.append(r.done())

    # 14: a wide-open set query paged five rectangles at a time.
    r = Recorder(client, "projection-paged")
    r.load(ids["house"])
    status, body = r.projection(
        {
            "values": house_values,
            "target": {"kind": "interval", "low": "-inf", "high": "inf"},
            "radius": 6,
            "dims": [0, 1],
            "page": [0, 5],
        }
    )
    assert status == 200 and body["total"] > 5 and len(body["rects"]) == 5
    total14 = body["total"]
    status, body = r.projection({"page": [5, 5]})
    assert status == 200 and body["total"] == total14 and len(body["rects"]) == min(5, total14 - 5)
    sessions.append(r.done())

    # 15: pinned and weighted features travel as fix= and weight= params.
    r = Recorder(client, "projection-fix-weight")
    r.load(ids["credit"])
    status, body = r.projection(
        {
            "values": credit_values,
            "pin": [4],
            "weights": {"2": 4},
            "target": {"kind": "class", "class": credit_flip},
            "radius": radius13,
            "dims": [0, 1],
        }
    )
    assert status == 200 and body["total"] >= 1
    sessions.append(r.done())

    # 16: radius barely past the optimum isolates a single rectangle.
    r = Recorder(client, "single-rect")
    r.load(ids["house"])
    status, body = r.cf({"values": house_values, "target": {"kind": "interval", "low": house_v + 0.2, "high": "inf"}})
    assert status == 200
    radius16 = round(body["sq_dist"] * 1.0001, 9)
    status, body = r.cfset({"radius": radius16})
    assert status == 200 and body["count"] == 1, body["count"]
    status, body = r.projection({"dims": [0, 2]})
    assert status == 200 and body["total"] == 1 and len(body["rects"]) == 1
    sessions.append(r.done())

    # 17: two evaluations as the point moves.
    r = Recorder(client, "evaluate-loop")
    r.load(ids["credit"])
    status, body = r.evaluate({"values": credit_values})
    assert status == 200
    status, body = r.evaluate({"values": {"1": -0.75}})
    assert status == 200
    sessions.append(r.done())

    # 18: a set query without a radius is a client mistake the server names.
    r = Recorder(client, "missing-radius-set")
    r.load(ids["house"])
    status, body = r.cfset({"values": house_values, "target": None})
    assert status == 400 and "radius" in body["error"]
    sessions.append(r.done())

    # 19: unknown model id.
    r = Recorder(client, "unknown-model")
    status, body = r.load("ffffffffffffffff")
    assert status == 404 and "unknown model" in body["error"]
    sessions.append(r.done())

    # 20: a zero time budget turns any real search into a 503 with telemetry.
    r = Recorder(strict_client, "budget-trip")
    r.load(ids["credit"])
    status, body = r.cf({"values": credit_values, "target": {"kind": "class", "class": credit_flip}})
    assert status == 503 and "stats" in body, body
    sessions.append(r.done())

    assert len(sessions) == 20
    fixture = {
        "note": "golden request/response sessions; regenerate with scripts/record_sessions.py",
        "sessions": sessions,
    }
    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    with FIXTURE.open("w") as fp:
        json.dump(fixture, fp, indent=1, allow_nan=False)
        fp.write("\n")
    print(f"wrote {FIXTURE} ({len(sessions)} sessions, "
          f"{sum(len(s['steps']) for s in sessions)} steps)")


if __name__ == "__main__":
    main()
