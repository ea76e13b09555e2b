"""JSON payload builders and parsers shared by the CLI and the service.

One code path produces every externally visible result body, so a query
answered on the command line and the same query answered over HTTP yield
identical JSON. Run statistics (node counts, timings) are attached only on
request: they may vary across schedules and would break the byte-for-byte
reproducibility of default outputs.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import QueryValidationError
from .geometry import PureRegion
from .model import EnsembleModel, _encode_bound
from .search import CfQuery, CfResult, CfSetItem, CfTarget, ProjectedRect, SearchStats


def region_payload(region: PureRegion) -> dict:
    doc = {
        "box": [[_encode_bound(iv.lo), _encode_bound(iv.hi)] for iv in region.box],
        "member_leaf_ids": [int(i) for i in region.members.ids()],
        "margin": [float(v) for v in region.margin],
        "score": [float(v) for v in region.score],
    }
    if isinstance(region.klass, float):
        doc["value"] = region.klass
    else:
        doc["class"] = int(region.klass)
    return doc


def stats_payload(stats: SearchStats) -> dict:
    considered = stats.leaves_considered
    return {
        "explored_nodes": int(stats.explored_nodes),
        "leaves_considered": None if considered is None else int(considered),
        "elapsed": float(stats.elapsed),
        "bound_log": [float(v) for v in stats.bound_log],
    }


def result_payload(result: CfResult | None, stats: SearchStats | None = None) -> dict:
    if result is None:
        doc: dict = {"status": "not_found"}
    else:
        doc = {
            "status": "ok",
            "point": [float(v) for v in result.point],
            "sq_dist": float(result.sq_dist),
            "dist": math.sqrt(float(result.sq_dist)),
            "nudged": bool(result.nudged),
            "validated": bool(result.validated),
            "region": region_payload(result.region),
        }
    if stats is not None:
        doc["stats"] = stats_payload(stats)
    return doc


def set_payload(items: list[CfSetItem], stats: SearchStats | None = None) -> dict:
    doc = {
        "status": "ok",
        "count": len(items),
        "items": [
            {
                "point": [float(v) for v in item.point],
                "sq_dist": float(item.sq_dist),
                "dist": math.sqrt(float(item.sq_dist)),
                "nudged": bool(item.nudged),
                "region": region_payload(item.region),
            }
            for item in items
        ],
    }
    if stats is not None:
        doc["stats"] = stats_payload(stats)
    return doc


def projection_payload(
    rects: list[ProjectedRect], dims: tuple[int, int], total: int | None = None
) -> dict:
    return {
        "dims": [int(dims[0]), int(dims[1])],
        "total": len(rects) if total is None else int(total),
        "rects": [
            {
                "x": [_encode_bound(r.x[0]), _encode_bound(r.x[1])],
                "y": [_encode_bound(r.y[0]), _encode_bound(r.y[1])],
                **(
                    {"value": float(r.klass)}
                    if isinstance(r.klass, float)
                    else {"class": int(r.klass)}
                ),
                "score": [float(v) for v in r.score],
                **({"sq_dist": float(r.sq_dist)} if r.sq_dist is not None else {}),
            }
            for r in rects
        ],
    }


def evaluation_payload(model: EnsembleModel, x: np.ndarray) -> dict:
    pred = model.predict(x)
    doc = {
        "margin": [float(v) for v in pred.margin],
        "output": [float(v) for v in pred.output],
    }
    if isinstance(pred.decision, float):
        doc["value"] = pred.decision
    else:
        doc["class"] = int(pred.decision)
    return doc


def model_metadata(model: EnsembleModel) -> dict:
    return {
        "dims": model.dims,
        "classes": model.classes,
        "num_trees": model.num_trees,
        "num_leaves": model.num_leaves,
        "aggregation": {
            "kind": model.aggregation.kind,
            "base_score": model.aggregation.base_score,
        },
        "feature_names": list(model.feature_names) if model.feature_names else None,
    }


def query_from_payload(model: EnsembleModel, doc: dict) -> CfQuery:
    """Parse a CfQuery JSON body; malformed structure raises
    QueryValidationError (semantic checks happen when the query runs)."""
    if not isinstance(doc, dict):
        raise QueryValidationError("query body must be a JSON object")
    unknown = set(doc) - {
        "x",
        "target",
        "fixed_dims",
        "weights",
        "radius",
        "epsilon_pred",
    }
    if unknown:
        raise QueryValidationError(f"unknown query fields: {sorted(unknown)}")
    try:
        x = [float(v) for v in doc["x"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise QueryValidationError(f"malformed x: {exc}") from exc
    target = None
    if doc.get("target") is not None:
        target = CfTarget.from_dict(doc["target"])
    try:
        fixed = tuple(int(d) for d in doc.get("fixed_dims") or ())
        weights = doc.get("weights")
        if weights is not None:
            weights = [float(w) for w in weights]
        radius = doc.get("radius")
        if radius is not None:
            radius = float(radius)
        eps = doc.get("epsilon_pred")
        if eps is not None:
            eps = float(eps)
    except (TypeError, ValueError) as exc:
        raise QueryValidationError(f"malformed query: {exc}") from exc
    return CfQuery(
        x=x,
        target=target,
        fixed_dims=fixed,
        weights=weights,
        radius=radius,
        epsilon_pred=eps,
    )


def query_to_payload(query: CfQuery) -> dict:
    doc: dict = {"x": [float(v) for v in query.x]}
    if query.target is not None:
        doc["target"] = query.target.to_dict()
    if query.fixed_dims:
        doc["fixed_dims"] = [int(d) for d in query.fixed_dims]
    if query.weights is not None:
        doc["weights"] = [float(w) for w in query.weights]
    if query.radius is not None:
        doc["radius"] = float(query.radius)
    if query.epsilon_pred is not None:
        doc["epsilon_pred"] = float(query.epsilon_pred)
    return doc
