"""
The HTTP service, end to end
============================

The same engine behind a small JSON API: load a model, evaluate, query
counterfactuals, fetch projection rectangles. This tour drives the app
in-process with a test client; `uvicorn` serves the identical app object
in production (see README).
"""

import json
import warnings

warnings.filterwarnings("ignore", message="Using `httpx` with `starlette.testclient`")
from fastapi.testclient import TestClient

from boxcf import RandomModelSpec, generate_model
from boxcf.service import create_app

client = TestClient(create_app())

# Load a model: the id is a content hash, so reloading after a restart
# yields the same id and byte-identical responses.
model = generate_model(
    RandomModelSpec(seed=31, dims=4, classes=2, num_trees=10, aggregation="softmax-sum")
)
resp = client.post("/models", json=model.to_dict())
mid = resp.json()["model_id"]
print(f"POST /models -> {mid} ({resp.json()['num_leaves']} leaves)")

# Evaluate a point.
x = [0.2, -0.7, 1.1, 0.0]
resp = client.post(f"/models/{mid}/evaluate", json={"x": x})
print(f"POST /models/{mid[:6]}../evaluate -> {json.dumps(resp.json())}")
current = resp.json()["class"]

# Nearest counterfactual for the other class, with telemetry.
body = {"x": x, "target": {"kind": "class", "class": 1 - current}, "stats": True}
resp = client.post(f"/models/{mid}/cf", json=body)
doc = resp.json()
print(f"\nPOST cf -> status {resp.status_code}")
print(f"  point {[round(v, 4) for v in doc['point']]}")
print(f"  sq_dist {doc['sq_dist']:.6f}  validated {doc['validated']}")
print(f"  explored {doc['stats']['explored_nodes']} nodes")

# Unreachable targets are a 422 with a reason, not an error.
resp = client.post(
    f"/models/{mid}/cf",
    json={"x": x, "target": {"kind": "class", "class": 1 - current},
          "fixed_dims": [0, 1, 2, 3]},
)
print(f"\nPOST cf with every dim pinned -> {resp.status_code} "
      f"({resp.json().get('reason')})")

# Projection rectangles for a 2-D view, paginated.
params = {
    "dims": "0,1", "x": ",".join(str(v) for v in x),
    "class": str(1 - current), "radius": "6.0", "limit": "3",
}
resp = client.get(f"/models/{mid}/projection", params=params)
doc = resp.json()
print(f"\nGET projection -> {doc['total']} rects total, first {len(doc['rects'])}:")
for rect in doc["rects"]:
    print(f"  x {rect['x']}  y {rect['y']}  class {rect['class']}"
          f"  sq_dist {round(rect['sq_dist'], 4)}")

# Malformed input is a 400 with a parse position.
resp = client.post(f"/models/{mid}/cf", content=b"{oops",
                   headers={"content-type": "application/json"})
print(f"\nmalformed body -> {resp.status_code}: {resp.json()['error']}")
