"""HTTP query service: the engine behind a small JSON API.

Endpoints (all bodies and responses are the same JSON schemas the CLI
prints, produced by one shared code path):

* ``POST /models`` — load a canonical model, returns its content-hash id.
* ``GET /models/{id}`` — metadata and feature names.
* ``POST /models/{id}/cf`` — CfQuery body, CfResult response.
* ``POST /models/{id}/cfset`` — CfQuery body with ``radius``, region list.
* ``POST /models/{id}/evaluate`` — ``{"x": [...]}``, scores and decision.
* ``GET /models/{id}/projection`` — 2-D rectangles of a set query for
  plotting (``dims=i,j`` plus the query as query-string parameters).

Status codes: 400 malformed input, 404 unknown model, 422 infeasible query
(target unreachable: a normal outcome, distinguished from errors), 413
region guard tripped, 503 time budget exhausted (body carries partial run
statistics). Model ids are content hashes, so reloading the same model
after a restart reproduces every response byte for byte.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ._payloads import (
    evaluation_payload,
    model_metadata,
    projection_payload,
    query_from_payload,
    result_payload,
    set_payload,
    stats_payload,
)
from .errors import (
    BoxcfError,
    DecompositionTooLargeError,
    InternalSearchError,
    ParseError,
    QueryValidationError,
    TimeBudgetExceededError,
)
from .model import EnsembleModel
from .search import (
    CfQuery,
    CfTarget,
    SearchOptions,
    cf_query_with_stats,
    cf_set_with_stats,
    parallel_search_with_stats,
    project_regions,
)

OPTION_KEYS = ("workers", "split_depth", "stats", "time_budget")


@dataclass
class SessionModel:
    """A loaded model plus the per-dimension presort index reused by every
    query against it."""

    model_id: str
    model: EnsembleModel
    presort: list
    created_at: float = field(default_factory=time.time)


def create_app(
    models_dir: str | None = None,
    time_budget: float = 30.0,
    default_workers: int = 1,
    max_workers: int = 8,
) -> FastAPI:
    """Build the service application.

    ``models_dir`` preloads every ``*.json`` canonical model in the
    directory. ``time_budget`` caps per-query wall time (requests may lower
    it, never raise it). Request worker counts are clamped to
    ``max_workers``.
    """
    app = FastAPI(title="boxcf", version="0.1.0")
    models: dict[str, SessionModel] = {}
    app.state.models = models
    app.state.time_budget = float(time_budget)
    app.state.default_workers = int(default_workers)
    app.state.max_workers = int(max_workers)

    if models_dir is not None:
        import glob
        import os

        for path in sorted(glob.glob(os.path.join(models_dir, "*.json"))):
            _register(models, EnsembleModel.load(path))

    @app.exception_handler(BoxcfError)
    async def boxcf_error(request: Request, exc: BoxcfError):
        if isinstance(exc, DecompositionTooLargeError):
            body = {"error": str(exc), "emitted": exc.emitted, "cap": exc.cap}
            return JSONResponse(body, status_code=413)
        if isinstance(exc, TimeBudgetExceededError):
            body = {"error": str(exc)}
            if exc.stats is not None:
                body["stats"] = stats_payload(exc.stats)
            return JSONResponse(body, status_code=503)
        if isinstance(exc, InternalSearchError):
            return JSONResponse({"error": str(exc)}, status_code=500)
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.post("/models")
    async def load_model(request: Request):
        doc = await _json_body(request)
        try:
            model = EnsembleModel.from_dict(doc)
        except (TypeError, AttributeError) as exc:
            raise ParseError(f"malformed model document: {exc}") from exc
        session = _register(models, model)
        return {"model_id": session.model_id, **model_metadata(model)}

    @app.get("/models/{model_id}")
    async def get_model(model_id: str):
        session = _session_or_404(models, model_id)
        if isinstance(session, JSONResponse):
            return session
        return {"model_id": session.model_id, **model_metadata(session.model)}

    @app.post("/models/{model_id}/cf")
    async def cf(model_id: str, request: Request):
        session = _session_or_404(models, model_id)
        if isinstance(session, JSONResponse):
            return session
        body = await _json_body(request)
        query, options, want_stats = _parse_query_body(app, session.model, body)
        if options.workers > 1:
            result, stats = parallel_search_with_stats(
                session.model, query, options=options
            )
        else:
            result, stats = cf_query_with_stats(session.model, query, options)
        payload = result_payload(result, stats if want_stats else None)
        if result is None:
            payload["reason"] = "no region of the model satisfies the target"
            return JSONResponse(payload, status_code=422)
        return payload

    @app.post("/models/{model_id}/cfset")
    async def cfset(model_id: str, request: Request):
        session = _session_or_404(models, model_id)
        if isinstance(session, JSONResponse):
            return session
        body = await _json_body(request)
        query, options, want_stats = _parse_query_body(app, session.model, body)
        if query.radius is None:
            raise QueryValidationError("cfset requires a radius")
        items, stats = cf_set_with_stats(session.model, query, options)
        return set_payload(items, stats if want_stats else None)

    @app.post("/models/{model_id}/evaluate")
    async def evaluate_endpoint(model_id: str, request: Request):
        session = _session_or_404(models, model_id)
        if isinstance(session, JSONResponse):
            return session
        body = await _json_body(request)
        model = session.model
        try:
            x = [float(v) for v in body["x"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise QueryValidationError(f"malformed x: {exc}") from exc
        if len(x) != model.dims or not all(math.isfinite(v) for v in x):
            raise QueryValidationError(
                f"x must be {model.dims} finite coordinates"
            )
        import numpy as np

        return evaluation_payload(model, np.asarray(x))

    @app.get("/models/{model_id}/projection")
    async def projection(model_id: str, request: Request):
        session = _session_or_404(models, model_id)
        if isinstance(session, JSONResponse):
            return session
        model = session.model
        params = request.query_params
        dims = _parse_dims(params.get("dims"), model.dims)
        query = _query_from_params(model, params)
        if query.radius is None:
            raise QueryValidationError("projection requires a radius")
        options = _options_for(app, params.get("workers"), None, params.get("time_budget"))
        items, _ = cf_set_with_stats(model, query, options)
        rects = project_regions(items, dims)
        total = len(rects)
        offset = _int_param(params, "offset", 0)
        limit = _int_param(params, "limit", total)
        rects = rects[offset : offset + max(0, limit)]
        doc = projection_payload(rects, dims, total=total)
        doc["point"] = [float(query.x[dims[0]]), float(query.x[dims[1]])]
        return doc

    return app


def _register(models: dict, model: EnsembleModel) -> SessionModel:
    model_id = model.digest()[:16]
    session = models.get(model_id)
    if session is None:
        session = SessionModel(
            model_id=model_id, model=model, presort=model.presort_index()
        )
        models[model_id] = session
    return session


def _session_or_404(models: dict, model_id: str):
    session = models.get(model_id)
    if session is None:
        return JSONResponse({"error": f"unknown model {model_id!r}"}, status_code=404)
    return session


async def _json_body(request: Request) -> dict:
    raw = await request.body()
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON body at byte offset {exc.pos}") from exc


def _options_for(app: FastAPI, workers, split_depth, time_budget) -> SearchOptions:
    w = app.state.default_workers if workers is None else int(workers)
    w = max(1, min(w, app.state.max_workers))
    budget = app.state.time_budget
    if time_budget is not None:
        budget = min(float(time_budget), budget)
    sd = None if split_depth is None else int(split_depth)
    return SearchOptions(workers=w, split_depth=sd, time_budget=budget)


def _parse_query_body(
    app: FastAPI, model: EnsembleModel, body: dict
) -> tuple[CfQuery, SearchOptions, bool]:
    if not isinstance(body, dict):
        raise QueryValidationError("query body must be a JSON object")
    body = dict(body)
    raw = {k: body.pop(k) for k in OPTION_KEYS if k in body}
    try:
        options = _options_for(
            app, raw.get("workers"), raw.get("split_depth"), raw.get("time_budget")
        )
        want_stats = bool(raw.get("stats", False))
    except (TypeError, ValueError) as exc:
        raise QueryValidationError(f"malformed options: {exc}") from exc
    query = query_from_payload(model, body)
    return query, options, want_stats


def _parse_dims(raw: str | None, model_dims: int) -> tuple[int, int]:
    if raw is None:
        raise QueryValidationError("projection requires dims=i,j")
    try:
        parts = [int(v) for v in raw.split(",")]
    except ValueError as exc:
        raise QueryValidationError(f"bad dims {raw!r}: {exc}") from exc
    if len(parts) != 2 or parts[0] == parts[1]:
        raise QueryValidationError("dims must name two distinct dimensions")
    for d in parts:
        if not 0 <= d < model_dims:
            raise QueryValidationError(f"dims entry {d} out of range")
    return parts[0], parts[1]


def _int_param(params, name: str, default: int) -> int:
    raw = params.get(name)
    if raw is None:
        return default
    try:
        return max(0, int(raw))
    except ValueError as exc:
        raise QueryValidationError(f"bad {name} {raw!r}") from exc


def _query_from_params(model: EnsembleModel, params) -> CfQuery:
    """Build a CfQuery from projection query-string parameters: ``x``
    (comma floats, required), ``radius``, one of ``class`` / ``interval`` /
    ``epsilon`` (+ ``side``), repeatable ``fix=D:V`` and ``weight=D:W``."""
    raw_x = params.get("x")
    if raw_x is None:
        raise QueryValidationError("projection requires x=...")
    try:
        x = [float(v) for v in raw_x.split(",")]
    except ValueError as exc:
        raise QueryValidationError(f"bad x {raw_x!r}: {exc}") from exc

    target = None
    epsilon_pred = None
    if params.get("class") is not None:
        try:
            target = CfTarget.for_class(int(params["class"]))
        except ValueError as exc:
            raise QueryValidationError(f"bad class {params['class']!r}") from exc
    elif params.get("interval") is not None:
        lo, sep, hi = params["interval"].partition(":")
        if not sep:
            raise QueryValidationError("interval must be LO:HI")
        try:
            target = CfTarget.score_interval(float(lo), float(hi))
        except ValueError as exc:
            raise QueryValidationError(f"bad interval: {exc}") from exc
    elif params.get("epsilon") is not None:
        try:
            eps = float(params["epsilon"])
        except ValueError as exc:
            raise QueryValidationError(f"bad epsilon: {exc}") from exc
        if model.aggregation.kind == "logistic-sum":
            target = CfTarget.probability_threshold(eps, params.get("side", "le"))
        else:
            epsilon_pred = eps

    fixed: list[int] = []
    weights = None
    for item in params.getlist("fix"):
        dim, _, val = item.partition(":")
        try:
            d, v = int(dim), float(val)
        except ValueError as exc:
            raise QueryValidationError(f"bad fix {item!r} (expected D:V)") from exc
        if not 0 <= d < len(x):
            raise QueryValidationError(f"fix dimension {d} out of range")
        x[d] = v
        fixed.append(d)
    for item in params.getlist("weight"):
        dim, _, val = item.partition(":")
        try:
            d, v = int(dim), float(val)
        except ValueError as exc:
            raise QueryValidationError(f"bad weight {item!r} (expected D:W)") from exc
        if not 0 <= d < len(x):
            raise QueryValidationError(f"weight dimension {d} out of range")
        if weights is None:
            weights = [1.0] * len(x)
        weights[d] = v

    radius = params.get("radius")
    if radius is not None:
        try:
            radius = float(radius)
        except ValueError as exc:
            raise QueryValidationError(f"bad radius {radius!r}") from exc

    return CfQuery(
        x=x,
        target=target,
        fixed_dims=tuple(sorted(set(fixed))),
        weights=weights,
        radius=radius,
        epsilon_pred=epsilon_pred,
    )
