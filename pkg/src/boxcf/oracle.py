"""Reference answers and randomized models for validating the fast paths.

The oracle solves counterfactual queries the expensive way: decompose
everything, scan every pure region, keep the best. It shares the query
semantics (target test, distance accumulation order, nudge and tie rule)
with the search but none of its pruning, so agreement between the two is
meaningful evidence.

The random model generator emits a gbdt-style JSON dump and runs it through
the public ingest path, keeping a single source of truth for tree-to-box
folding. Thresholds come from a small per-dimension pool so coincident
endpoints (the hard case for the sweep) occur constantly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PureRegion, decompose, dist_to_box, containing_region
from .ingest import ingest
from .model import EnsembleModel, apply_aggregation
from .search import (
    CfQuery,
    CfResult,
    CfSetItem,
    SearchOptions,
    _finalize_point,
    _prepare,
    region_satisfies,
)


@dataclass
class RandomModelSpec:
    """Knobs for the seeded random model generator.

    Depth bounds refer to split depth (1 = stumps). ``threshold_pool`` is the
    number of distinct candidate thresholds per dimension; small pools force
    coincident endpoints. For multiclass specs, trees are assigned to classes
    round-robin, so ``num_trees`` must be >= ``classes``.
    """

    seed: int
    dims: int = 2
    classes: int = 1
    num_trees: int = 3
    min_depth: int = 1
    max_depth: int = 3
    threshold_pool: int = 16
    threshold_range: tuple[float, float] = (-4.0, 4.0)
    base_score: float = 0.0
    aggregation: str | None = None


def generate_dump(spec: RandomModelSpec) -> list:
    """A JSON-ready gbdt-style dump (list of tree objects) for the spec."""
    if spec.classes > 1 and spec.num_trees < spec.classes:
        raise ValueError("multiclass specs need num_trees >= classes")
    if not 0 <= spec.min_depth <= spec.max_depth:
        raise ValueError("need 0 <= min_depth <= max_depth")
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.threshold_range
    pools = [
        np.sort(rng.uniform(lo, hi, spec.threshold_pool)) for _ in range(spec.dims)
    ]

    trees = []
    for _ in range(spec.num_trees):
        counter = [0]

        def build(depth: int, box: dict):
            nodeid = counter[0]
            counter[0] += 1
            split = None
            if depth < spec.max_depth and (depth < spec.min_depth or rng.random() < 0.7):
                split = _pick_split(rng, pools, box)
            if split is None:
                return {"nodeid": nodeid, "leaf": float(rng.normal(0.0, 1.0))}
            dim, t = split
            b_lo, b_hi = box.get(dim, (-math.inf, math.inf))
            yes_box = dict(box)
            yes_box[dim] = (b_lo, t)
            no_box = dict(box)
            no_box[dim] = (t, b_hi)
            yes = build(depth + 1, yes_box)
            no = build(depth + 1, no_box)
            return {
                "nodeid": nodeid,
                "split": f"f{dim}",
                "split_condition": float(t),
                "yes": yes["nodeid"],
                "no": no["nodeid"],
                "missing": yes["nodeid"],
                "children": [yes, no],
            }

        trees.append(build(0, {}))
    return trees


def _pick_split(rng, pools, box):
    """A (dim, threshold) strictly inside the node's box, or None."""
    dims = rng.permutation(len(pools))
    for dim in dims:
        b_lo, b_hi = box.get(int(dim), (-math.inf, math.inf))
        pool = pools[int(dim)]
        inside = pool[(pool > b_lo) & (pool < b_hi)]
        if inside.shape[0]:
            return int(dim), float(rng.choice(inside))
    return None


def generate_model(spec: RandomModelSpec) -> EnsembleModel:
    """Seeded random ensemble; identical spec gives an identical model."""
    dump = generate_dump(spec)
    return ingest(
        dump,
        format="gbdt-json-dump",
        classes=spec.classes,
        aggregation=spec.aggregation,
        base_score=spec.base_score,
        dims=spec.dims,
    )


def traverse_dump(
    dump: list, x, classes: int = 1, base_score: float = 0.0
) -> np.ndarray:
    """Independent evaluation: walk each tree root-to-leaf, no box folding."""
    x = np.asarray(x, dtype=np.float64)
    margins = np.zeros(classes)
    for t, tree in enumerate(dump):
        node = tree
        while "leaf" not in node:
            dim = int(node["split"][1:]) if isinstance(node["split"], str) else int(node["split"])
            wanted = node["yes"] if x[dim] < node["split_condition"] else node["no"]
            node = next(c for c in node["children"] if c["nodeid"] == wanted)
        margins[t % classes] += node["leaf"]
    return margins + base_score


# ---------------------------------------------------------------------------
# brute-force counterfactual oracle


def oracle_cf(
    model: EnsembleModel,
    query: CfQuery,
    options: SearchOptions | None = None,
    regions: list[PureRegion] | None = None,
) -> CfResult | None:
    """Reference counterfactual: full decomposition, scan all target regions.

    Shares the target test, distance accumulation order, nudge and tie rule
    with the search, but not its pruning. For queries with pinned dimensions
    the witness region box may differ from the search's on the pinned
    dimensions (both are valid containers of the returned point); distance
    and point are the comparable contract.

    ``regions`` may carry a precomputed full decomposition of the model (only
    valid for queries without pinned dimensions).
    """
    options = options or SearchOptions()
    ctx = _prepare(model, query, options)
    pred = model.predict(ctx.x_full)
    rule = model.aggregation
    if region_satisfies(rule, ctx.target, pred.margin):
        return CfResult(
            point=ctx.x_full.copy(),
            sq_dist=0.0,
            region=containing_region(model, ctx.x_full),
            nudged=False,
            validated=True,
        )
    if ctx.free_dims.shape[0] == 0:
        return None
    cands = _scan_regions(model, ctx, regions, radius=None)
    if not cands:
        return None
    best = min(cands, key=lambda c: (c[0], c[1]))
    return _oracle_result(model, ctx, best)


def oracle_cf_set(
    model: EnsembleModel,
    query: CfQuery,
    options: SearchOptions | None = None,
    regions: list[PureRegion] | None = None,
) -> list[CfSetItem]:
    """Reference set query: all target regions strictly inside the radius."""
    options = options or SearchOptions()
    ctx = _prepare(model, query, options, for_set=True)
    if ctx.free_dims.shape[0] == 0:
        pred = model.predict(ctx.x_full)
        if ctx.radius > 0.0 and region_satisfies(model.aggregation, ctx.target, pred.margin):
            region = containing_region(model, ctx.x_full)
            return [CfSetItem(region, ctx.x_full.copy(), 0.0, False)]
        return []
    cands = _scan_regions(model, ctx, regions, radius=ctx.radius)
    cands.sort(key=lambda c: (c[0], c[1]))
    out = []
    for cand in cands:
        res = _oracle_result(model, ctx, cand, validate=False)
        out.append(CfSetItem(res.region, res.point, res.sq_dist, res.nudged))
    return out


def _scan_regions(model, ctx, regions, radius):
    """(sq_dist, nudged_point_tuple, nudged, region) for every target region
    (strictly inside the radius when one is given)."""
    if regions is None:
        regions = decompose(
            model, leaf_filter=ctx.eligible, max_regions=ctx.options.max_regions
        )
    elif ctx.fixed:
        raise ValueError("precomputed regions cannot be reused with pinned dims")
    rule = model.aggregation
    free = ctx.free_dims
    out = []
    for region in regions:
        if ctx.fixed and not all(
            region.box[d].contains(float(ctx.x_full[d])) for d in ctx.fixed
        ):
            continue  # outside the pinned slice
        if not region_satisfies(rule, ctx.target, region.margin):
            continue
        lows = [region.box[d].lo for d in free]
        highs = [region.box[d].hi for d in free]
        sq, pnt = dist_to_box(ctx.x, lows, highs, ctx.w)
        if radius is not None and not sq < radius:
            continue
        box_red = tuple((float(l), float(h)) for l, h in zip(lows, highs))
        fpoint, nudged = _finalize_point(tuple(float(v) for v in pnt), box_red)
        out.append((float(sq), fpoint, nudged, region, box_red))
    return out


def _oracle_result(model, ctx, cand, validate: bool = True) -> CfResult:
    sq, fpoint, nudged, region, _ = cand
    point = ctx.x_full.copy()
    point[ctx.free_dims] = np.asarray(fpoint)
    if validate:
        pred = model.predict(point)
        if not region_satisfies(model.aggregation, ctx.target, pred.margin):
            raise AssertionError("oracle point failed re-validation")
        # same witness convention as the search: the full-model cell at the
        # point (for pinned queries the scanned region may be coarser)
        region = containing_region(model, point)
    return CfResult(point=point, sq_dist=sq, region=region, nudged=nudged, validated=validate)


# ---------------------------------------------------------------------------
# sampling validation


def sample_validate(
    model: EnsembleModel,
    count: int = 1000,
    seed: int = 0,
    points: np.ndarray | None = None,
    regions: list[PureRegion] | None = None,
    atol: float = 1e-12,
) -> dict:
    """Sample points and check model/decomposition consistency.

    Per point: every tree contains the point in exactly one leaf; when a
    decomposition is supplied, exactly one region contains it, the region's
    raw margin equals evaluation bitwise, and post-aggregation outputs agree
    within ``atol``. Returns a JSON-ready report
    ``{"checked": n, "violations": [...]}`` (empty violations = pass).
    """
    if points is None:
        rng = np.random.default_rng(seed)
        lo, hi = _sampling_box(model)
        points = rng.uniform(lo, hi, size=(count, model.dims))
    else:
        points = np.asarray(points, dtype=np.float64)

    region_lows = region_highs = None
    if regions is not None:
        region_lows = np.array([[iv.lo for iv in r.box] for r in regions])
        region_highs = np.array([[iv.hi for iv in r.box] for r in regions])

    violations = []
    for p in points:
        mask = model.containing_leaves(p)
        per_tree = np.bincount(model.tree_ids[mask], minlength=model.num_trees)
        if not np.all(per_tree == 1):
            bad = np.flatnonzero(per_tree != 1)
            violations.append(
                {
                    "kind": "tree-cover",
                    "point": [float(v) for v in p],
                    "trees": [int(t) for t in bad],
                    "counts": [int(per_tree[t]) for t in bad],
                }
            )
        if regions is None:
            continue
        inside = np.flatnonzero(
            np.all((region_lows <= p) & (p < region_highs), axis=1)
        )
        if inside.shape[0] != 1:
            violations.append(
                {
                    "kind": "region-cover",
                    "point": [float(v) for v in p],
                    "containing": [int(i) for i in inside],
                }
            )
            continue
        region = regions[int(inside[0])]
        margins = model.margin(p)
        if not np.array_equal(region.margin, margins):
            violations.append(
                {
                    "kind": "margin-mismatch",
                    "point": [float(v) for v in p],
                    "region_margin": [float(v) for v in region.margin],
                    "eval_margin": [float(v) for v in margins],
                }
            )
            continue
        out_region = apply_aggregation(model.aggregation, region.margin)
        out_eval = apply_aggregation(model.aggregation, margins)
        if not np.all(np.abs(out_region - out_eval) <= atol):
            violations.append(
                {
                    "kind": "output-mismatch",
                    "point": [float(v) for v in p],
                }
            )
    return {"checked": int(points.shape[0]), "violations": violations}


def _sampling_box(model: EnsembleModel) -> tuple[np.ndarray, np.ndarray]:
    """A finite box covering all finite endpoints with a margin, so samples
    land on both sides of every breakpoint."""
    lo = np.empty(model.dims)
    hi = np.empty(model.dims)
    for d in range(model.dims):
        vals = np.concatenate([model.lows[:, d], model.highs[:, d]])
        finite = vals[np.isfinite(vals)]
        if finite.shape[0] == 0:
            lo[d], hi[d] = -1.0, 1.0
        else:
            span = float(finite.max() - finite.min()) or 1.0
            lo[d] = float(finite.min()) - 0.25 * span
            hi[d] = float(finite.max()) + 0.25 * span
    return lo, hi
