"""Box distances and the exact pure-region decomposition.

A pure region is a maximal axis-aligned box over which the ensemble output is
constant: every point inside is covered by exactly the same set of leaves.
Decomposition sweeps one dimension at a time, splitting the leaf set into
elementary segments and recursing on each, so a model with N leaves yields at
most ``(2N - 1)^D`` regions (usually far fewer).

All distances are *squared* euclidean distances, optionally with per-dimension
nonnegative weights; square roots belong to the presentation layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from ._engine import Node, Workspace, expand_child, make_root
from .errors import DecompositionTooLargeError
from .leafset import LeafSet
from .model import (
    EnsembleModel,
    Interval,
    apply_aggregation,
    decide,
    _encode_bound,
)

DEFAULT_REGION_CAP = 10_000_000


@dataclass(frozen=True)
class PureRegion:
    """A maximal box of constant model output.

    ``margin`` is the pre-link class-margin vector (member scores summed in
    ascending leaf-id order, plus base_score), ``score`` the post-link output
    and ``klass`` the implied decision (class index, or raw value for
    regression models).
    """

    box: tuple[Interval, ...]
    members: LeafSet
    margin: np.ndarray
    score: np.ndarray
    klass: int | float

    def contains(self, x: Sequence[float]) -> bool:
        return all(iv.contains(float(v)) for iv, v in zip(self.box, x))


def dist_to_box(
    x: Sequence[float],
    lows: Sequence[float],
    highs: Sequence[float],
    weights: Sequence[float] | None = None,
) -> tuple[float, np.ndarray]:
    """Weighted squared distance from x to a half-open box, with argmin.

    Accumulates per-dimension terms left to right (``acc += w * gap * gap``),
    the same order the search uses, so equal geometry gives bitwise-equal
    distances. The argmin point is the clamp of x into the box; for a
    coordinate at or beyond the excluded upper bound the infimum sits on that
    excluded face (callers nudge before using the point).
    """
    x = np.asarray(x, dtype=np.float64)
    lows = np.asarray(lows, dtype=np.float64)
    highs = np.asarray(highs, dtype=np.float64)
    point = np.empty_like(x)
    acc = 0.0
    for d in range(x.shape[0]):
        v = x[d]
        if v < lows[d]:
            gap = lows[d] - v
            point[d] = lows[d]
        elif v >= highs[d]:
            gap = v - highs[d]
            point[d] = highs[d]
        else:
            gap = 0.0
            point[d] = v
        w = 1.0 if weights is None else float(weights[d])
        acc = acc + w * (gap * gap)
    return float(acc), point


def dist_to_boxes(
    x: np.ndarray,
    lows: np.ndarray,
    highs: np.ndarray,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized dist_to_box over (R, D) box arrays (distances only).

    Keeps the same left-to-right per-dimension accumulation as the scalar
    version, so the results match it bitwise.
    """
    r, d = lows.shape
    acc = np.zeros(r)
    for dim in range(d):
        v = x[dim]
        lo = lows[:, dim]
        hi = highs[:, dim]
        gap = np.where(v < lo, lo - v, np.where(v >= hi, v - hi, 0.0))
        w = 1.0 if weights is None else float(weights[dim])
        acc = acc + w * (gap * gap)
    return acc


def decompose(
    model: EnsembleModel,
    leaf_filter: Sequence[int] | LeafSet | None = None,
    max_regions: int = DEFAULT_REGION_CAP,
) -> list[PureRegion]:
    """Decompose (a subset of) a model's leaves into all pure regions.

    Emission order is deterministic: depth-first over dimensions in ascending
    order, segments in ascending span order. Raises
    DecompositionTooLargeError once the running region count exceeds
    ``max_regions``.
    """
    leaf_ids = _filter_ids(model, leaf_filter)
    ws = Workspace(model, leaf_ids=leaf_ids)
    regions: list[PureRegion] = []
    root = make_root(ws)
    if root is None:
        return regions

    # stack entries: (node-to-be-expanded is built lazily) parent, seg, box
    stack: list[tuple[Node | None, int, tuple[Interval, ...]]] = [(None, -1, ())]
    while stack:
        parent, seg, box = stack.pop()
        node = root if parent is None else expand_child(ws, parent, seg)
        depth = len(box)
        live = np.flatnonzero(node.counts > 0)
        if depth == ws.dr - 1:
            for j in live:
                span = Interval(float(node.bp[j]), float(node.bp[j + 1]))
                _emit(ws, node, int(j), box + (span,), regions, max_regions)
        else:
            for j in live[::-1]:  # reversed push => ascending pop order
                span = Interval(float(node.bp[j]), float(node.bp[j + 1]))
                stack.append((node, int(j), box + (span,)))
    return regions


def _emit(
    ws: Workspace,
    node: Node,
    seg: int,
    box: tuple[Interval, ...],
    regions: list[PureRegion],
    max_regions: int,
) -> None:
    if len(regions) >= max_regions:
        raise DecompositionTooLargeError(
            f"decomposition exceeds the region cap ({max_regions})",
            emitted=len(regions),
            cap=max_regions,
        )
    local = node.segment_members(seg)
    margins = ws.margins_of(local)
    rule = ws.model.aggregation
    regions.append(
        PureRegion(
            box=box,
            members=LeafSet.from_ids(ws.leaf_ids[local], ws.model.num_leaves),
            margin=margins,
            score=apply_aggregation(rule, margins),
            klass=decide(rule, margins),
        )
    )


def _filter_ids(model: EnsembleModel, leaf_filter) -> np.ndarray | None:
    if leaf_filter is None:
        return None
    if isinstance(leaf_filter, LeafSet):
        if leaf_filter.size != model.num_leaves:
            raise ValueError("leaf_filter size does not match the model")
        return leaf_filter.ids()
    ids = np.asarray(list(leaf_filter), dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= model.num_leaves):
        raise ValueError("leaf_filter id out of range")
    return np.sort(ids)


def containing_region(model: EnsembleModel, x: Sequence[float]) -> PureRegion:
    """The pure region whose (half-open) box contains x.

    Descends the decomposition tree along x only, one segment per dimension.
    If some dimension of x falls outside every leaf (possible only for bare
    leaf collections, never for parsed tree models), the member set goes
    empty and the remaining dimensions stay unconstrained.
    """
    x = np.asarray(x, dtype=np.float64)
    ws = Workspace(model)
    node = make_root(ws)
    box: list[Interval] = []
    local = np.arange(ws.n, dtype=np.int64)
    for d in range(ws.dr):
        if node is None or node.local_ids.shape[0] == 0:
            box.append(Interval(-np.inf, np.inf))
            local = local[:0]
            continue
        j = int(np.searchsorted(node.bp, x[d], side="right")) - 1
        if j < 0 or j >= node.num_segments:
            # outside all breakpoints of this subset: unbounded empty side
            lo = -np.inf if j < 0 else float(node.bp[-1])
            hi = float(node.bp[0]) if j < 0 else np.inf
            box.append(Interval(lo, hi))
            local = local[:0]
            node = None
            continue
        box.append(Interval(float(node.bp[j]), float(node.bp[j + 1])))
        local = node.segment_members(j)
        node = expand_child(ws, node, j) if d < ws.dr - 1 else None
    margins = ws.margins_of(local)
    rule = model.aggregation
    return PureRegion(
        box=tuple(box),
        members=LeafSet.from_ids(ws.leaf_ids[local], model.num_leaves),
        margin=margins,
        score=apply_aggregation(rule, margins),
        klass=decide(rule, margins),
    )


def export_regions_jsonl(regions: Sequence[PureRegion], fp: IO[str] | str) -> None:
    """Write regions as JSON lines: one object per region with its box,
    member leaf ids, aggregated score and class (infinities as strings)."""

    def _write(fh):
        for region in regions:
            doc = {
                "box": [[_encode_bound(iv.lo), _encode_bound(iv.hi)] for iv in region.box],
                "member_leaf_ids": [int(i) for i in region.members.ids()],
                "score": [float(s) for s in region.score],
                "class": region.klass,
            }
            fh.write(json.dumps(doc))
            fh.write("\n")

    if isinstance(fp, str):
        with open(fp, "w") as fh:
            _write(fh)
    else:
        _write(fp)
