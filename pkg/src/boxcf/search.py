"""Optimal counterfactual queries over leaf-box ensembles.

Given a query point x and a target (a class, a probability threshold for
binary models, or an output interval for regression), the search returns the
closest point of the input space whose pure region satisfies the target,
under the weighted squared euclidean distance. The search is exact: a cheap
greedy descent first produces an upper bound on the optimal distance, then a
branch-and-bound walk over the decomposition tree prunes every subtree whose
partial distance already exceeds the best bound. Tasks at exactly the bound
are kept, so all equal-distance optima are enumerated and ties resolve
deterministically to the lexicographically smallest returned point.

Distances are squared throughout; presentation layers take square roots.
"""

from __future__ import annotations

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._engine import (
    Node,
    Workspace,
    expand_child,
    make_root,
    segment_gaps,
    segment_gaps_points,
    vote_counts,
)
from .errors import (
    DecompositionTooLargeError,
    InternalSearchError,
    QueryValidationError,
    TimeBudgetExceededError,
)
from .geometry import (
    DEFAULT_REGION_CAP,
    PureRegion,
    containing_region,
    dist_to_boxes,
)
from .leafset import LeafSet
from .model import (
    AggregationRule,
    EnsembleModel,
    Interval,
    apply_aggregation,
    decide,
)

# padding applied to the leaf prefilter threshold so the one-ulp inward nudge
# of a returned point can never land inside a discarded leaf
_PREFILTER_REL = 1e-9
_PREFILTER_ABS = 1e-12

# bound refinement: on workspaces at least this large, short depth-first
# bursts tighten the bound before the exhaustive run; as long as a burst
# improves the bound below the ratio, the leaf prefilter shrinks the
# workspace and the burst restarts
_REFINE_MIN_LEAVES = 256
_REFINE_NODE_BUDGET = 2000
_REFINE_RATIO = 0.6
_REFINE_MAX_PHASES = 8


@dataclass(frozen=True)
class CfTarget:
    """What the counterfactual must achieve.

    kind ``class``: predicted class equals ``klass`` (softmax argmax, or the
    0.5-threshold decision for binary logistic models). kind ``threshold``:
    logistic output on the ``side`` of ``epsilon``. kind ``interval``: model
    output inside ``[low, high]`` (inclusive; ends may be infinite).
    """

    kind: str
    klass: int | None = None
    low: float | None = None
    high: float | None = None
    epsilon: float | None = None
    side: str = "le"

    @classmethod
    def for_class(cls, klass: int) -> "CfTarget":
        return cls(kind="class", klass=int(klass))

    @classmethod
    def score_interval(cls, low: float, high: float) -> "CfTarget":
        return cls(kind="interval", low=float(low), high=float(high))

    @classmethod
    def probability_threshold(cls, epsilon: float, side: str = "le") -> "CfTarget":
        return cls(kind="threshold", epsilon=float(epsilon), side=side)

    def to_dict(self) -> dict:
        if self.kind == "class":
            return {"kind": "class", "class": self.klass}
        if self.kind == "threshold":
            return {"kind": "threshold", "epsilon": self.epsilon, "side": self.side}
        return {
            "kind": "interval",
            "low": _num_or_str(self.low),
            "high": _num_or_str(self.high),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CfTarget":
        try:
            kind = doc["kind"]
            if kind == "class":
                return cls.for_class(int(doc["class"]))
            if kind == "threshold":
                return cls.probability_threshold(
                    float(doc["epsilon"]), str(doc.get("side", "le"))
                )
            if kind == "interval":
                return cls.score_interval(
                    _bound_from(doc["low"], -math.inf), _bound_from(doc["high"], math.inf)
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise QueryValidationError(f"malformed target: {exc}") from exc
        raise QueryValidationError(f"unknown target kind {kind!r}")


def _num_or_str(v: float) -> float | str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return v


def _bound_from(v, default: float) -> float:
    if v is None:
        return default
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        raise ValueError(f"bad interval bound {v!r}")
    return float(v)


@dataclass
class CfQuery:
    """A counterfactual query.

    ``fixed_dims`` pins those coordinates to their values in x (the search
    runs over the remaining dimensions only). ``weights`` are per-dimension
    nonnegative distance weights. ``radius`` (squared units) selects set
    queries. ``epsilon_pred`` stands in for an explicit target: it resolves
    to the interval [F(x) - eps, F(x) + eps] around the model's own value
    at x when the query is prepared.
    """

    x: Sequence[float]
    target: CfTarget | None = None
    fixed_dims: Sequence[int] = ()
    weights: Sequence[float] | None = None
    radius: float | None = None
    epsilon_pred: float | None = None


@dataclass
class SearchOptions:
    use_bound: bool = True
    vote_filter: bool = True
    leaf_prefilter: bool = True
    interval_bound_prune: bool = False
    max_regions: int = DEFAULT_REGION_CAP
    split_depth: int | None = None
    workers: int = 1
    time_budget: float | None = None


@dataclass
class SearchStats:
    """Telemetry for one query. explored_nodes counts expanded tasks; under
    multi-worker runs it is schedule-dependent (informational only)."""

    explored_nodes: int = 0
    bound_log: list = field(default_factory=list)
    leaves_considered: int | None = None
    elapsed: float = 0.0


@dataclass(frozen=True)
class CfResult:
    """An optimal counterfactual: the returned point, its squared distance
    (of the pre-nudge infimum), the witness pure region, whether any
    coordinate was nudged off an excluded face, and the re-validation flag."""

    point: np.ndarray
    sq_dist: float
    region: PureRegion
    nudged: bool
    validated: bool


@dataclass(frozen=True)
class CfSetItem:
    region: PureRegion
    point: np.ndarray
    sq_dist: float
    nudged: bool


@dataclass(frozen=True)
class ProjectedRect:
    """A pure region seen through two dimensions, for plotting."""

    x: Interval
    y: Interval
    klass: int | float
    score: np.ndarray
    sq_dist: float | None = None


def region_satisfies(rule: AggregationRule, target: CfTarget, margins: np.ndarray) -> bool:
    """The single target test shared by evaluation, search, oracle and sets."""
    if target.kind == "class":
        return decide(rule, margins) == target.klass
    if target.kind == "threshold":
        p = float(apply_aggregation(rule, margins)[0])
        return p <= target.epsilon if target.side == "le" else p >= target.epsilon
    v = float(apply_aggregation(rule, margins)[0])
    return target.low <= v <= target.high


def validate_target(model: EnsembleModel, target: CfTarget) -> None:
    k = model.classes
    kind = model.aggregation.kind
    if target.kind == "class":
        if target.klass is None:
            raise QueryValidationError("class target needs a class index")
        if kind == "identity-sum":
            raise QueryValidationError("class targets do not apply to regression models")
        limit = 2 if kind == "logistic-sum" else k
        if not 0 <= target.klass < limit:
            raise QueryValidationError(
                f"target class {target.klass} out of range for {limit} classes"
            )
    elif target.kind == "threshold":
        if kind != "logistic-sum":
            raise QueryValidationError("threshold targets require a logistic model")
        if target.epsilon is None or not 0.0 < target.epsilon < 1.0:
            raise QueryValidationError("threshold epsilon must lie in (0, 1)")
        if target.side not in ("le", "ge"):
            raise QueryValidationError("threshold side must be 'le' or 'ge'")
    elif target.kind == "interval":
        if k != 1:
            raise QueryValidationError("interval targets require a single-output model")
        if target.low is None or target.high is None or math.isnan(target.low) or math.isnan(target.high):
            raise QueryValidationError("interval target needs numeric low/high")
        if not target.low <= target.high:
            raise QueryValidationError("interval target needs low <= high")
    else:
        raise QueryValidationError(f"unknown target kind {target.kind!r}")


def restrict_leaves(
    model: EnsembleModel, x: Sequence[float], fixed_dims: Sequence[int]
) -> tuple[LeafSet, np.ndarray]:
    """Leaves eligible under pinned dimensions, plus the free-dimension map.

    A leaf is eligible iff its interval contains x[d] for every fixed d; only
    such leaves can cover any point of the pinned slice.
    """
    x = np.asarray(x, dtype=np.float64)
    fixed = sorted(set(int(d) for d in fixed_dims))
    for d in fixed:
        if not 0 <= d < model.dims:
            raise QueryValidationError(f"fixed dim {d} out of range")
    mask = np.ones(model.num_leaves, dtype=bool)
    for d in fixed:
        mask &= (model.lows[:, d] <= x[d]) & (x[d] < model.highs[:, d])
    free = np.array([d for d in range(model.dims) if d not in set(fixed)], dtype=np.int64)
    return LeafSet.from_mask(mask), free


# ---------------------------------------------------------------------------
# query context and shared plumbing


@dataclass
class _Ctx:
    model: EnsembleModel
    target: CfTarget
    x_full: np.ndarray
    x: np.ndarray  # reduced to free dims
    w: np.ndarray  # reduced weights (ones when unweighted)
    weights_full: np.ndarray | None
    fixed: tuple[int, ...]
    free_dims: np.ndarray  # ascending original dim ids
    eligible: LeafSet
    options: SearchOptions
    stats: SearchStats
    deadline: float | None
    radius: float | None = None

    def check_time(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise TimeBudgetExceededError("search exceeded its time budget", stats=self.stats)


def _prepare(
    model: EnsembleModel, query: CfQuery, options: SearchOptions, for_set: bool = False
) -> _Ctx:
    x = np.asarray(query.x, dtype=np.float64)
    if x.shape != (model.dims,):
        raise QueryValidationError(f"x must have shape ({model.dims},)")
    if not np.all(np.isfinite(x)):
        raise QueryValidationError("x must be finite")

    weights = None
    if query.weights is not None:
        weights = np.asarray(query.weights, dtype=np.float64)
        if weights.shape != (model.dims,):
            raise QueryValidationError(f"weights must have shape ({model.dims},)")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise QueryValidationError("weights must be finite and nonnegative")

    target = query.target
    if for_set:
        if query.radius is None or not math.isfinite(query.radius) or query.radius < 0:
            raise QueryValidationError("set queries need a finite radius >= 0 (squared units)")
        if query.epsilon_pred is not None:
            if target is not None:
                raise QueryValidationError("give either a target or epsilon_pred, not both")
            if model.classes != 1:
                raise QueryValidationError("epsilon_pred requires a single-output model")
            if not math.isfinite(query.epsilon_pred) or query.epsilon_pred < 0:
                raise QueryValidationError("epsilon_pred must be finite and >= 0")
            v = float(apply_aggregation(model.aggregation, model.margin(x))[0])
            target = CfTarget.score_interval(v - query.epsilon_pred, v + query.epsilon_pred)
    if target is None:
        raise QueryValidationError("query needs a target")
    validate_target(model, target)

    eligible, free = restrict_leaves(model, x, query.fixed_dims)
    fixed = tuple(sorted(set(int(d) for d in query.fixed_dims)))
    stats = SearchStats()
    deadline = None
    if options.time_budget is not None:
        deadline = time.monotonic() + options.time_budget
    return _Ctx(
        model=model,
        target=target,
        x_full=x,
        x=x[free],
        w=np.ones(free.shape[0]) if weights is None else weights[free],
        weights_full=weights,
        fixed=fixed,
        free_dims=free,
        eligible=eligible,
        options=options,
        stats=stats,
        deadline=deadline,
        radius=float(query.radius) if for_set else None,
    )


def _vote_mask(ws: Workspace, ctx: _Ctx) -> np.ndarray | None:
    """Workspace-local mask of leaves voting for the target class, or None
    when the vote prune does not apply.

    Pruning cells with no target-class voter is exact only when every leaf
    casts exactly one positive vote: with signed or absent votes, a class
    can still win a cell it has no voter in (every opposing sum negative),
    so the prune stays off for such score patterns. For tree-parsed models
    (one leaf per tree alive in every sub-box) the prune never fires; it
    pays off on sparse hand-built leaf collections.
    """
    if not ctx.options.vote_filter or ctx.target.kind != "class" or ws.k < 2:
        return None
    nonzero = np.count_nonzero(ws.scores, axis=1)
    if np.any(nonzero != 1):
        return None  # dense or empty rows: no per-leaf vote exists
    if np.any(ws.scores[ws.scores != 0.0] <= 0.0):
        return None  # signed votes: zero-voter cells can still win
    vote = np.argmax(ws.scores != 0.0, axis=1)
    return vote == ctx.target.klass


def _margin_value_range(ws: Workspace, node: Node) -> tuple[float, float]:
    """Reachable [min, max] margin over terminal member sets below a node,
    assuming one leaf per tree (per-tree min/max of member scores)."""
    tree = ws.model.tree_ids[ws.leaf_ids[node.local_ids]]
    s = ws.scores[node.local_ids, 0]
    lo = np.full(ws.model.num_trees, np.inf)
    hi = np.full(ws.model.num_trees, -np.inf)
    np.minimum.at(lo, tree, s)
    np.maximum.at(hi, tree, s)
    lo[np.isinf(lo)] = 0.0
    hi[np.isinf(hi)] = 0.0
    return ws.base + float(lo.sum()), ws.base + float(hi.sum())


def _interval_prunable(ws: Workspace, ctx: _Ctx, node: Node) -> bool:
    """Optional prune for K = 1 targets: drop the node when no reachable
    margin can satisfy the target. Off by default (SearchOptions)."""
    if ws.k != 1:
        return False
    m_lo, m_hi = _margin_value_range(ws, node)
    rule = ws.model.aggregation
    v_lo = float(apply_aggregation(rule, np.array([m_lo]))[0])
    v_hi = float(apply_aggregation(rule, np.array([m_hi]))[0])
    t = ctx.target
    if t.kind == "interval":
        return v_hi < t.low or v_lo > t.high
    if t.kind == "threshold":
        return v_lo > t.epsilon if t.side == "le" else v_hi < t.epsilon
    if t.kind == "class":  # binary logistic: class 1 iff margin >= 0
        return m_hi < 0.0 if t.klass == 1 else m_lo >= 0.0
    return False


# ---------------------------------------------------------------------------
# upper bound (greedy nearest-first descent)


def _greedy_bound(ws: Workspace, ctx: _Ctx) -> float | None:
    """Squared distance of some target region, visiting elementary intervals
    in ascending per-dimension distance; None iff no target region exists.

    Exhaustive in the worst case: siblings are never discarded, so a None
    answer is definitive and branch-and-bound can trust it. Only the nodes
    on the current root-to-leaf path are materialized; pending siblings are
    kept as segment ids, so memory stays proportional to one path even when
    the descent backtracks a lot.
    """
    root = make_root(ws)
    if root is None:
        return None
    rule = ws.model.aggregation
    last = ws.dr - 1

    def level_of(node: Node, d: int, dist_cur: float):
        ctx.stats.explored_nodes += 1
        ctx.check_time()
        gaps = segment_gaps(node.bp, float(ctx.x[d]))
        dists = dist_cur + ctx.w[d] * (gaps * gaps)
        idx = np.flatnonzero(node.counts > 0)
        order = idx[np.argsort(dists[idx], kind="stable")]
        return node, dists, list(order[::-1])  # nearest segment last

    path = [level_of(root, 0, 0.0)]
    while path:
        d = len(path) - 1
        node, dists, pending = path[-1]
        if d == last:
            for j in pending[::-1]:  # ascending distance
                margins = ws.margins_of(node.segment_members(int(j)))
                if region_satisfies(rule, ctx.target, margins):
                    return float(dists[int(j)])
            path.pop()
            continue
        if not pending:
            path.pop()
            continue
        j = int(pending.pop())
        path.append(level_of(expand_child(ws, node, j), d + 1, float(dists[j])))
    return None


def upper_bound(
    model: EnsembleModel, query: CfQuery, options: SearchOptions | None = None
) -> float | None:
    """Cheap upper bound on the optimal squared counterfactual distance.

    Returns None when no region satisfies the target at all (a definitive
    answer, not a failure of the heuristic).
    """
    options = options or SearchOptions()
    ctx = _prepare(model, query, options)
    pred = model.predict(ctx.x_full)
    if region_satisfies(model.aggregation, ctx.target, pred.margin):
        return 0.0
    if ctx.free_dims.shape[0] == 0:
        return None
    ws = Workspace(model, leaf_ids=ctx.eligible.ids(), dim_ids=ctx.free_dims)
    return _greedy_bound(ws, ctx)


# ---------------------------------------------------------------------------
# branch and bound


class _BoundCell:
    """Monotonically decreasing best bound, safe to share across workers.

    offer() only ever lowers the value (strict improvement), so the logged
    sequence is nonincreasing in every schedule.
    """

    __slots__ = ("_lock", "value", "log")

    def __init__(self, value: float):
        self._lock = threading.Lock()
        self.value = value
        self.log = [value]

    def get(self) -> float:
        return self.value  # atomic read

    def offer(self, v: float) -> None:
        with self._lock:
            if v < self.value:
                self.value = v
                self.log.append(v)


@dataclass
class _Candidate:
    sq_dist: float
    point: tuple  # reduced dims (ascending original order), after nudging
    nudged: bool
    box: tuple  # reduced dims, ((lo, hi), ...)
    members_local: np.ndarray
    margins: np.ndarray


def _better(a: _Candidate, b: _Candidate) -> bool:
    if a.sq_dist != b.sq_dist:
        return a.sq_dist < b.sq_dist
    return a.point < b.point


def _finalize_point(coords: tuple, box: tuple) -> tuple[tuple, bool]:
    """Nudge coordinates sitting on an excluded upper face one float inward."""
    out = []
    nudged = False
    for c, (lo, hi) in zip(coords, box):
        if c == hi:
            c = float(np.nextafter(hi, -math.inf))
            nudged = True
        out.append(float(c))
    return tuple(out), nudged


def _dfs(
    ws: Workspace,
    ctx: _Ctx,
    stack: list,
    cell: _BoundCell,
    stats: SearchStats,
    vote_mask: np.ndarray | None,
    node_budget: int | None = None,
) -> tuple[_Candidate | None, bool]:
    """Depth-first branch and bound over a stack of pending tasks.

    Stack entries are ``(dist, parent_node, seg, point, box)`` with the
    parent left unexpanded until popped; tasks beyond the current bound are
    dropped at pop time too, so late bound improvements still help. Tasks at
    exactly the bound survive (tie enumeration).

    Returns the best candidate found plus a completion flag; with a
    ``node_budget`` the walk may stop early (flag False), which callers use
    for cheap bound-tightening bursts.
    """
    rule = ws.model.aggregation
    best: _Candidate | None = None
    last = ws.dr - 1
    expanded = 0
    while stack:
        if node_budget is not None and expanded >= node_budget:
            return best, False
        dist_cur, parent, seg, point, box = stack.pop()
        if dist_cur > cell.get():
            continue
        node = parent if seg < 0 else expand_child(ws, parent, seg)
        stats.explored_nodes += 1
        expanded += 1
        ctx.check_time()
        d = len(box)
        if ctx.options.interval_bound_prune and _interval_prunable(ws, ctx, node):
            continue
        gaps, pts = segment_gaps_points(node.bp, float(ctx.x[d]))
        dists = dist_cur + ctx.w[d] * (gaps * gaps)
        ok = (node.counts > 0) & (dists <= cell.get())
        if vote_mask is not None:
            ok &= vote_counts(node, vote_mask) > 0
        idx = np.flatnonzero(ok)
        if idx.shape[0] == 0:
            continue
        if d == last:
            for j in idx:
                members = node.segment_members(int(j))
                margins = ws.margins_of(members)
                if not region_satisfies(rule, ctx.target, margins):
                    continue
                sq = float(dists[j])
                span = (float(node.bp[j]), float(node.bp[j + 1]))
                fpoint, nudged = _finalize_point(
                    point + (float(pts[j]),), box + (span,)
                )
                cand = _Candidate(
                    sq, fpoint, nudged, box + (span,), members, margins
                )
                cell.offer(sq)
                if best is None or _better(cand, best):
                    best = cand
        else:
            order = idx[np.argsort(dists[idx], kind="stable")]
            for j in order[::-1]:  # push farthest first; nearest pops first
                span = (float(node.bp[j]), float(node.bp[j + 1]))
                stack.append(
                    (
                        float(dists[j]),
                        node,
                        int(j),
                        point + (float(pts[j]),),
                        box + (span,),
                    )
                )
    return best, True


def _self_result(model: EnsembleModel, ctx: _Ctx) -> CfResult:
    region = containing_region(model, ctx.x_full)
    return CfResult(
        point=ctx.x_full.copy(),
        sq_dist=0.0,
        region=region,
        nudged=False,
        validated=True,
    )


def _inflate_box(ctx: _Ctx, ws: Workspace, box: tuple, members_global: np.ndarray) -> tuple:
    """Lift a reduced-dimension box back to full dimensionality; pinned
    dimensions take the intersection of the member leaves' intervals."""
    model = ctx.model
    full: list[Interval] = []
    by_free = {int(d): i for i, d in enumerate(ctx.free_dims)}
    for d in range(model.dims):
        if d in by_free:
            lo, hi = box[by_free[d]]
            full.append(Interval(lo, hi))
        elif members_global.shape[0]:
            full.append(
                Interval(
                    float(model.lows[members_global, d].max()),
                    float(model.highs[members_global, d].min()),
                )
            )
        else:
            full.append(Interval(-math.inf, math.inf))
    return tuple(full)


def _finalize_result(ctx: _Ctx, ws: Workspace, cand: _Candidate) -> CfResult:
    model = ctx.model
    rule = model.aggregation
    point = ctx.x_full.copy()
    point[ctx.free_dims] = np.asarray(cand.point)
    # The witness region is recomputed from the point against the full model:
    # the search may have merged cells across dropped-leaf endpoints (leaf
    # prefilter), and only the full-arrangement cell is pure by construction.
    region = containing_region(model, point)
    pred = model.predict(point)
    if not region_satisfies(rule, ctx.target, pred.margin):
        raise InternalSearchError(
            "returned point failed re-validation; this is a bug"
        )
    return CfResult(
        point=point,
        sq_dist=cand.sq_dist,
        region=region,
        nudged=cand.nudged,
        validated=True,
    )


def _prefilter(ws: Workspace, ctx: _Ctx, bound: float) -> Workspace:
    """Drop leaves whose boxes lie entirely beyond the (padded) bound."""
    if not math.isfinite(bound):
        return ws
    dists = dist_to_boxes(ctx.x, ws.lows, ws.highs, ctx.w)
    threshold = bound * (1.0 + _PREFILTER_REL) + _PREFILTER_ABS
    keep = dists <= threshold
    ctx.stats.leaves_considered = int(keep.sum())
    if keep.all():
        return ws
    return Workspace(ctx.model, leaf_ids=ws.leaf_ids[keep], dim_ids=ctx.free_dims)


def _search_impl(
    model: EnsembleModel, query: CfQuery, options: SearchOptions, workers: int
) -> tuple[CfResult | None, SearchStats]:
    t0 = time.monotonic()
    ctx = _prepare(model, query, options)
    stats = ctx.stats
    try:
        result = _search_body(model, ctx, workers)
    finally:
        stats.elapsed = time.monotonic() - t0
    return result, stats


def _search_body(model: EnsembleModel, ctx: _Ctx, workers: int) -> CfResult | None:
    options = ctx.options
    pred = model.predict(ctx.x_full)
    if region_satisfies(model.aggregation, ctx.target, pred.margin):
        return _self_result(model, ctx)
    if ctx.free_dims.shape[0] == 0:
        return None

    ws = Workspace(model, leaf_ids=ctx.eligible.ids(), dim_ids=ctx.free_dims)
    if options.use_bound:
        bound0 = _greedy_bound(ws, ctx)
        if bound0 is None:
            return None
        if options.leaf_prefilter:
            ws = _prefilter(ws, ctx, bound0)
    else:
        bound0 = math.inf

    cell = _BoundCell(bound0)
    best: _Candidate | None = None

    # Bound refinement on large workspaces: the greedy bound can overshoot
    # the optimum by orders of magnitude, which leaves the prefilter toothless
    # and makes every node expansion pay for leaves that can never matter.
    # Short depth-first bursts tighten the bound cheaply; whenever it halves,
    # re-prefilter and restart so the exhaustive run only ever walks the
    # arrangement of leaves within reach of the final bound.
    if options.use_bound and options.leaf_prefilter:
        anchor = cell.get()
        for _ in range(_REFINE_MAX_PHASES):
            if ws.n < _REFINE_MIN_LEAVES:
                break
            burst_root = make_root(ws)
            if burst_root is None:
                break
            cand, completed = _dfs(
                ws,
                ctx,
                [(0.0, burst_root, -1, (), ())],
                cell,
                ctx.stats,
                _vote_mask(ws, ctx),
                node_budget=_REFINE_NODE_BUDGET,
            )
            if cand is not None and (best is None or _better(cand, best)):
                best = cand
            if completed:  # the burst already searched this workspace fully
                ctx.stats.bound_log = cell.log
                return None if best is None else _finalize_result(ctx, ws, best)
            if cell.get() > _REFINE_RATIO * anchor:
                break
            ws = _prefilter(ws, ctx, cell.get())
            anchor = cell.get()

    vote_mask = _vote_mask(ws, ctx)
    root = make_root(ws)
    if root is None:
        return None if best is None else _finalize_result(ctx, ws, best)

    if options.split_depth is not None:
        split = options.split_depth
        task_cap = None  # explicit depth: honor it exactly
    elif workers <= 1:
        split = 0  # nothing to feed; run plain depth-first from the root
        task_cap = None
    else:
        split = min(ws.dr, 4)
        task_cap = 8 * workers  # enough chunks for balance, bounded memory
    split = max(0, min(split, ws.dr - 1))

    # width-first expansion down to the split depth
    frontier: list = [(0.0, root, -1, (), ())]
    for depth in range(split):
        if task_cap is not None and len(frontier) >= task_cap:
            break
        nxt: list = []
        for dist_cur, parent, seg, point, box in frontier:
            if dist_cur > cell.get():
                continue
            node = parent if seg < 0 else expand_child(ws, parent, seg)
            ctx.stats.explored_nodes += 1
            ctx.check_time()
            if options.interval_bound_prune and _interval_prunable(ws, ctx, node):
                continue
            gaps, pts = segment_gaps_points(node.bp, float(ctx.x[depth]))
            dists = dist_cur + ctx.w[depth] * (gaps * gaps)
            ok = (node.counts > 0) & (dists <= cell.get())
            if vote_mask is not None:
                ok &= vote_counts(node, vote_mask) > 0
            for j in np.flatnonzero(ok):
                span = (float(node.bp[j]), float(node.bp[j + 1]))
                nxt.append(
                    (
                        float(dists[j]),
                        node,
                        int(j),
                        point + (float(pts[j]),),
                        box + (span,),
                    )
                )
        frontier = nxt

    candidates: list[_Candidate | None] = []
    if workers <= 1 or len(frontier) <= 1:
        for task in frontier:
            candidates.append(_dfs(ws, ctx, [task], cell, ctx.stats, vote_mask)[0])
    else:
        def run_chunk(task):
            local = SearchStats()
            cand, _ = _dfs(ws, ctx, [task], cell, local, vote_mask)
            return cand, local

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_chunk, task) for task in frontier]
            for fut in futures:
                cand, local = fut.result()
                candidates.append(cand)
                ctx.stats.explored_nodes += local.explored_nodes

    for cand in candidates:
        if cand is not None and (best is None or _better(cand, best)):
            best = cand
    ctx.stats.bound_log = cell.log
    if best is None:
        return None
    return _finalize_result(ctx, ws, best)


def cf_query(
    model: EnsembleModel, query: CfQuery, options: SearchOptions | None = None
) -> CfResult | None:
    """Exact optimal counterfactual, or None when the target is unreachable."""
    return cf_query_with_stats(model, query, options)[0]


def cf_query_with_stats(
    model: EnsembleModel, query: CfQuery, options: SearchOptions | None = None
) -> tuple[CfResult | None, SearchStats]:
    return _search_impl(model, query, options or SearchOptions(), workers=1)


def parallel_search(
    model: EnsembleModel,
    query: CfQuery,
    workers: int | None = None,
    split_depth: int | None = None,
    options: SearchOptions | None = None,
) -> CfResult | None:
    return parallel_search_with_stats(model, query, workers, split_depth, options)[0]


def parallel_search_with_stats(
    model: EnsembleModel,
    query: CfQuery,
    workers: int | None = None,
    split_depth: int | None = None,
    options: SearchOptions | None = None,
) -> tuple[CfResult | None, SearchStats]:
    """cf_query with the depth-first phase spread over worker threads.

    Workers share the monotone best bound; the result (distance and point,
    under the tie rule) is identical to the single-worker search regardless
    of worker count or schedule.
    """
    options = options or SearchOptions()
    if workers is not None:
        options.workers = workers
    if split_depth is not None:
        options.split_depth = split_depth
    return _search_impl(model, query, options, workers=max(1, options.workers))


# ---------------------------------------------------------------------------
# counterfactual sets


def cf_set(
    model: EnsembleModel, query: CfQuery, options: SearchOptions | None = None
) -> list[CfSetItem]:
    return cf_set_with_stats(model, query, options)[0]


def cf_set_with_stats(
    model: EnsembleModel, query: CfQuery, options: SearchOptions | None = None
) -> tuple[list[CfSetItem], SearchStats]:
    """All target regions with squared distance strictly below the radius,
    ascending by distance (ties by point order). Shares the decomposition
    resource guard: more than ``options.max_regions`` matches is an error."""
    options = options or SearchOptions()
    t0 = time.monotonic()
    ctx = _prepare(model, query, options, for_set=True)
    stats = ctx.stats
    try:
        items = _set_body(model, ctx)
    finally:
        stats.elapsed = time.monotonic() - t0
    return items, stats


def _set_body(model: EnsembleModel, ctx: _Ctx) -> list[CfSetItem]:
    options = ctx.options
    radius = ctx.radius
    rule = model.aggregation

    if ctx.free_dims.shape[0] == 0:
        # every dimension pinned: the only candidate is x itself
        pred = model.predict(ctx.x_full)
        if radius > 0.0 and region_satisfies(rule, ctx.target, pred.margin):
            region = containing_region(model, ctx.x_full)
            return [CfSetItem(region, ctx.x_full.copy(), 0.0, False)]
        return []

    # No leaf prefilter here: leaves beyond the radius cannot join any
    # reported region, but their endpoints still cut nearby space, and set
    # queries must enumerate the cells of the unmerged arrangement.
    ws = Workspace(model, leaf_ids=ctx.eligible.ids(), dim_ids=ctx.free_dims)
    ctx.stats.leaves_considered = ws.n
    vote_mask = _vote_mask(ws, ctx)
    root = make_root(ws)
    if root is None:
        return []

    found: list[_Candidate] = []
    last = ws.dr - 1
    stack: list = [(0.0, root, -1, (), ())]
    while stack:
        dist_cur, parent, seg, point, box = stack.pop()
        node = parent if seg < 0 else expand_child(ws, parent, seg)
        ctx.stats.explored_nodes += 1
        ctx.check_time()
        if options.interval_bound_prune and _interval_prunable(ws, ctx, node):
            continue
        d = len(box)
        gaps, pts = segment_gaps_points(node.bp, float(ctx.x[d]))
        dists = dist_cur + ctx.w[d] * (gaps * gaps)
        # strict: a partial distance at the radius can never drop below it
        ok = (node.counts > 0) & (dists < radius)
        if vote_mask is not None:
            ok &= vote_counts(node, vote_mask) > 0
        idx = np.flatnonzero(ok)
        if idx.shape[0] == 0:
            continue
        if d == last:
            for j in idx:
                members = node.segment_members(int(j))
                margins = ws.margins_of(members)
                if not region_satisfies(rule, ctx.target, margins):
                    continue
                if len(found) >= options.max_regions:
                    raise DecompositionTooLargeError(
                        f"set query exceeds the region cap ({options.max_regions})",
                        emitted=len(found),
                        cap=options.max_regions,
                    )
                span = (float(node.bp[j]), float(node.bp[j + 1]))
                fpoint, nudged = _finalize_point(point + (float(pts[j]),), box + (span,))
                found.append(
                    _Candidate(
                        float(dists[j]), fpoint, nudged, box + (span,), members, margins
                    )
                )
        else:
            for j in idx[::-1]:
                span = (float(node.bp[j]), float(node.bp[j + 1]))
                stack.append(
                    (
                        float(dists[j]),
                        node,
                        int(j),
                        point + (float(pts[j]),),
                        box + (span,),
                    )
                )
    found.sort(key=lambda c: (c.sq_dist, c.point))
    out = []
    for cand in found:
        members_global = ws.leaf_ids[cand.members_local]
        point_full = ctx.x_full.copy()
        point_full[ctx.free_dims] = np.asarray(cand.point)
        region = PureRegion(
            box=_inflate_box(ctx, ws, cand.box, members_global),
            members=LeafSet.from_ids(members_global, model.num_leaves),
            margin=cand.margins,
            score=apply_aggregation(rule, cand.margins),
            klass=decide(rule, cand.margins),
        )
        out.append(CfSetItem(region, point_full, cand.sq_dist, cand.nudged))
    return out


def project_regions(
    items: Sequence[PureRegion | CfSetItem], dims: tuple[int, int]
) -> list[ProjectedRect]:
    """2-D rectangles of regions (or set items) along two dimensions."""
    i, j = int(dims[0]), int(dims[1])
    if i == j:
        raise QueryValidationError("projection needs two distinct dimensions")
    rects = []
    for item in items:
        region = item.region if isinstance(item, CfSetItem) else item
        sq = item.sq_dist if isinstance(item, CfSetItem) else None
        if not (0 <= i < len(region.box) and 0 <= j < len(region.box)):
            raise QueryValidationError("projection dimension out of range")
        rects.append(
            ProjectedRect(
                x=region.box[i], y=region.box[j], klass=region.klass,
                score=region.score, sq_dist=sq,
            )
        )
    return rects
