"""Command-line front-end: convert model dumps, answer queries, serve HTTP.

Exit codes: 0 success, 2 target-not-found (a normal query outcome), 1 any
error. Default outputs are byte-reproducible for a fixed query: run
statistics are printed only under --stats because node counts vary with
thread scheduling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ._payloads import (
    evaluation_payload,
    query_from_payload,
    result_payload,
    set_payload,
)
from .errors import BoxcfError
from .geometry import decompose
from .ingest import FORMATS, ingest
from .model import EnsembleModel
from .oracle import sample_validate
from .search import (
    CfQuery,
    CfTarget,
    SearchOptions,
    cf_query_with_stats,
    cf_set_with_stats,
    parallel_search_with_stats,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_FOUND = 2

WORKERS_ENV = "BOXCF_WORKERS"


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BoxcfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxcf",
        description="Exact counterfactual explanations for tree ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a model dump to canonical form")
    p.add_argument("input", help="model dump file")
    p.add_argument("output", help="canonical model file to write")
    p.add_argument("--format", default="gbdt-json-dump", choices=FORMATS)
    p.add_argument("--classes", type=int, default=1)
    p.add_argument("--aggregation", default=None,
                   help="identity-sum, logistic-sum or softmax-sum")
    p.add_argument("--base-score", type=float, default=0.0)
    p.add_argument("--dims", type=int, default=None,
                   help="widen the feature space beyond the largest split index")
    p.add_argument("--feature-names", default=None,
                   help="comma-separated feature names")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("evaluate", help="evaluate the model at a point")
    p.add_argument("model", help="canonical model file")
    p.add_argument("--x", required=True, help="comma-separated coordinates")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cf", help="answer a counterfactual query")
    p.add_argument("model", help="canonical model file")
    p.add_argument("--x", default=None, help="comma-separated query point")
    p.add_argument("--query", default=None,
                   help="JSON query file (inline flags override its fields)")
    p.add_argument("--target-class", type=int, default=None)
    p.add_argument("--target-interval", default=None, metavar="LO:HI",
                   help="output interval; inf/-inf allowed")
    p.add_argument("--epsilon", type=float, default=None,
                   help="logistic models: probability threshold target; "
                        "regression models: output band F(x) +/- epsilon")
    p.add_argument("--side", default="le", choices=("le", "ge"),
                   help="side of the probability threshold (with --epsilon)")
    p.add_argument("--fix", action="append", default=[], metavar="D=V",
                   help="pin dimension D to value V (repeatable)")
    p.add_argument("--weight", action="append", default=[], metavar="D=W",
                   help="distance weight for dimension D (repeatable)")
    p.add_argument("--radius", type=float, default=None,
                   help="squared radius: report all regions closer than this")
    p.add_argument("--workers", type=int, default=None,
                   help=f"search workers (default ${WORKERS_ENV} or 1)")
    p.add_argument("--split-depth", type=int, default=None)
    p.add_argument("--time-budget", type=float, default=None, metavar="SECONDS")
    p.add_argument("--stats", action="store_true",
                   help="include run statistics (not byte-reproducible)")
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("validate", help="sampling self-check of a model")
    p.add_argument("model", help="canonical model file")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--with-regions", action="store_true",
                   help="also decompose and check region purity")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP query service")
    p.add_argument("--models", default=None, metavar="DIR",
                   help="directory of canonical model files to preload")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--time-budget", type=float, default=30.0)
    p.set_defaults(func=cmd_serve)

    return parser


def _load_model(path: str) -> EnsembleModel:
    with open(path, "r", encoding="utf-8") as fp:
        return ingest(fp, format="canonical")


def _parse_point(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise BoxcfError(f"bad point {text!r}: {exc}") from exc


def _parse_assignments(pairs: list[str], what: str) -> dict[int, float]:
    out: dict[int, float] = {}
    for pair in pairs:
        try:
            dim, _, val = pair.partition("=")
            out[int(dim)] = float(val)
        except ValueError as exc:
            raise BoxcfError(f"bad {what} {pair!r} (expected D=V): {exc}") from exc
    return out


def _parse_interval(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise BoxcfError(f"bad interval {text!r} (expected LO:HI)")
    try:
        return float(lo), float(hi)
    except ValueError as exc:
        raise BoxcfError(f"bad interval {text!r}: {exc}") from exc


def cmd_convert(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fp:
        model = ingest(
            fp,
            format=args.format,
            classes=args.classes,
            aggregation=args.aggregation,
            base_score=args.base_score,
            dims=args.dims,
            feature_names=args.feature_names.split(",") if args.feature_names else None,
        )
    model.save(args.output)
    print(
        f"leaves={model.num_leaves} dims={model.dims} "
        f"classes={model.classes} trees={model.num_trees}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    x = np.asarray(_parse_point(args.x))
    print(json.dumps(evaluation_payload(model, x), indent=2))
    return EXIT_OK


def _query_from_args(model: EnsembleModel, args) -> CfQuery:
    if args.query is not None:
        with open(args.query, "r", encoding="utf-8") as fp:
            query = query_from_payload(model, json.load(fp))
        x = list(query.x)
        fixed = set(query.fixed_dims)
        weights = list(query.weights) if query.weights is not None else None
        target = query.target
        radius = query.radius
        epsilon_pred = query.epsilon_pred
    else:
        if args.x is None:
            raise BoxcfError("either --x or --query is required")
        x = _parse_point(args.x)
        fixed = set()
        weights = None
        target = None
        radius = None
        epsilon_pred = None

    if args.x is not None and args.query is not None:
        x = _parse_point(args.x)
    for dim, val in _parse_assignments(args.fix, "--fix").items():
        if not 0 <= dim < len(x):
            raise BoxcfError(f"--fix dimension {dim} out of range")
        x[dim] = val
        fixed.add(dim)
    weight_map = _parse_assignments(args.weight, "--weight")
    if weight_map:
        weights = weights if weights is not None else [1.0] * len(x)
        for dim, w in weight_map.items():
            if not 0 <= dim < len(x):
                raise BoxcfError(f"--weight dimension {dim} out of range")
            weights[dim] = w

    chosen = [
        v for v in (args.target_class, args.target_interval, args.epsilon) if v is not None
    ]
    if len(chosen) > 1:
        raise BoxcfError("choose one of --target-class, --target-interval, --epsilon")
    if args.target_class is not None:
        target = CfTarget.for_class(args.target_class)
    elif args.target_interval is not None:
        lo, hi = _parse_interval(args.target_interval)
        target = CfTarget.score_interval(lo, hi)
    elif args.epsilon is not None:
        if model.aggregation.kind == "logistic-sum":
            target = CfTarget.probability_threshold(args.epsilon, args.side)
        else:
            target = None
            epsilon_pred = args.epsilon
    if args.radius is not None:
        radius = args.radius

    return CfQuery(
        x=x,
        target=target,
        fixed_dims=tuple(sorted(fixed)),
        weights=weights,
        radius=radius,
        epsilon_pred=epsilon_pred,
    )


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_cf(args) -> int:
    model = _load_model(args.model)
    query = _query_from_args(model, args)
    workers = args.workers if args.workers is not None else default_workers()
    options = SearchOptions(
        split_depth=args.split_depth,
        workers=max(1, workers),
        time_budget=args.time_budget,
    )
    if query.radius is not None:
        items, stats = cf_set_with_stats(model, query, options)
        print(json.dumps(set_payload(items, stats if args.stats else None), indent=2))
        return EXIT_OK
    if options.workers > 1:
        result, stats = parallel_search_with_stats(
            model, query, workers=options.workers, options=options
        )
    else:
        result, stats = cf_query_with_stats(model, query, options)
    print(json.dumps(result_payload(result, stats if args.stats else None), indent=2))
    return EXIT_OK if result is not None else EXIT_NOT_FOUND


def cmd_validate(args) -> int:
    model = _load_model(args.model)
    regions = decompose(model) if args.with_regions else None
    report = sample_validate(model, count=args.samples, seed=args.seed, regions=regions)
    print(json.dumps(report, indent=2))
    return EXIT_OK if not report["violations"] else EXIT_ERROR


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        models_dir=args.models,
        time_budget=args.time_budget,
        default_workers=default_workers(),
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
