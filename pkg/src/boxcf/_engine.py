"""Shared node machinery for decomposition and counterfactual search.

Both the full decomposition and the branch-and-bound search walk the same
tree of tasks: a task at depth d is a subset of leaves whose boxes, restricted
to the first d swept dimensions, share a common elementary box. Expanding a
task sweeps the next dimension over the subset and splits it into elementary
segments, each defining a child task; at the last dimension the segments are
pure regions.

Event lists (endpoint values, interval ids, start/end flags) are kept sorted
per dimension and filtered by membership masks on the way down, so no node
ever re-sorts. Children are materialized lazily, at the moment a task is
actually expanded; a pruned task therefore costs almost nothing.
"""

from __future__ import annotations

import numpy as np

from .model import EnsembleModel
from .sweep import DimPresort, segment_counts, sweep_events


class Workspace:
    """A compact view of a model for one decomposition or query.

    Optionally restricted to a leaf subset (``leaf_ids``, ascending global
    ids) and a dimension subset (``dim_ids``, original dims in sweep order).
    All node-level arrays index leaves by workspace-local position.
    """

    def __init__(
        self,
        model: EnsembleModel,
        leaf_ids: np.ndarray | None = None,
        dim_ids: np.ndarray | None = None,
    ):
        if leaf_ids is None:
            leaf_ids = np.arange(model.num_leaves, dtype=np.int64)
        else:
            leaf_ids = np.asarray(leaf_ids, dtype=np.int64)
        if dim_ids is None:
            dim_ids = np.arange(model.dims, dtype=np.int64)
        else:
            dim_ids = np.asarray(dim_ids, dtype=np.int64)
        self.model = model
        self.leaf_ids = leaf_ids
        self.dim_ids = dim_ids
        self.n = int(leaf_ids.shape[0])
        self.dr = int(dim_ids.shape[0])
        self.lows = model.lows[leaf_ids][:, dim_ids] if self.n else np.zeros((0, self.dr))
        self.highs = model.highs[leaf_ids][:, dim_ids] if self.n else np.zeros((0, self.dr))
        self.scores = model.scores[leaf_ids]
        self.k = self.scores.shape[1]
        self.base = model.aggregation.base_score
        presorts = model.presort_index()
        if self.n == model.num_leaves:
            # full leaf set: local ids equal global ids, reuse events as-is
            self.events = [_events_of(presorts[int(d)]) for d in dim_ids]
        else:
            mask = np.zeros(model.num_leaves, dtype=bool)
            mask[leaf_ids] = True
            local_of = np.empty(model.num_leaves, dtype=np.int64)
            local_of[leaf_ids] = np.arange(self.n, dtype=np.int64)
            self.events = []
            for d in dim_ids:
                value, leaf, is_end = presorts[int(d)].select(mask)
                self.events.append((value, local_of[leaf], is_end))
        # per-dimension event positions of each leaf (start, end), so a node
        # can gather its own-dimension events in time proportional to its
        # member count rather than to the workspace size
        self.spos = []
        self.epos = []
        for value, leaf, is_end in self.events:
            spos = np.empty(self.n, dtype=np.int64)
            epos = np.empty(self.n, dtype=np.int64)
            idx = np.arange(leaf.shape[0], dtype=np.int64)
            spos[leaf[~is_end]] = idx[~is_end]
            epos[leaf[is_end]] = idx[is_end]
            self.spos.append(spos)
            self.epos.append(epos)

    def margins_of(self, local_ids: np.ndarray) -> np.ndarray:
        """Margin vector of a member set given by ascending local ids.

        Must stay a plain ascending-order row sum plus base: evaluate() uses
        the identical reduction, which is what makes raw margins of a pure
        region bitwise-equal to pointwise evaluation inside it.
        """
        return self.scores[local_ids].sum(axis=0) + self.base


def _events_of(pre: DimPresort) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return pre.value, pre.leaf, pre.is_end


class Node:
    """An expanded task: its member set and the sweep of its own dimension.

    Event lists are not copied down the tree: a node gathers only its own
    dimension's events through the workspace's per-leaf position index, in
    time proportional to its member count. Sorting the gathered positions
    reproduces exactly the subset order that filtering the presorted event
    arrays would give, so ranks and breakpoints are identical to a full
    filter-down-the-tree scheme.
    """

    __slots__ = ("local_ids", "pos", "bp", "s_rank", "e_rank", "counts")

    def __init__(self, ws: Workspace, local_ids: np.ndarray, pos: int):
        self.local_ids = local_ids  # ascending workspace-local member ids
        self.pos = pos  # sweep position: which workspace dimension this node cuts
        value, leaf, is_end = ws.events[pos]
        n = local_ids.shape[0]
        if n == ws.n:
            renumbered = leaf
        else:
            # Positions are unique, so a stable argsort of the gathered
            # positions is the sorted subset; the permutation itself tells
            # which member (order % n) and which side (order >= n) each
            # event came from.
            gathered = np.concatenate([ws.spos[pos][local_ids], ws.epos[pos][local_ids]])
            order = np.argsort(gathered, kind="stable")
            value = value[gathered[order]]
            is_end = order >= n
            renumbered = np.where(is_end, order - n, order)
        self.bp, self.s_rank, self.e_rank = sweep_events(value, renumbered, is_end, n)
        self.counts = segment_counts(self.bp, self.s_rank, self.e_rank)

    @property
    def num_segments(self) -> int:
        return self.counts.shape[0]

    def segment_mask(self, seg: int) -> np.ndarray:
        """Node-local membership mask of one elementary segment."""
        return (self.s_rank <= seg) & (seg < self.e_rank)

    def segment_members(self, seg: int) -> np.ndarray:
        """Workspace-local member ids of a segment, ascending."""
        return self.local_ids[self.segment_mask(seg)]


def make_root(ws: Workspace) -> Node | None:
    if ws.n == 0 or ws.dr == 0:
        return None
    return Node(ws, np.arange(ws.n, dtype=np.int64), 0)


def expand_child(ws: Workspace, parent: Node, seg: int) -> Node:
    """Materialize the child node for one segment of an expanded parent."""
    return Node(ws, parent.segment_members(seg), parent.pos + 1)


def segment_gaps(bp: np.ndarray, x: float) -> np.ndarray:
    """Per-segment 1-D gap between x and [bp[j], bp[j+1]) (infimum, so a
    point sitting exactly on the excluded upper bound has gap x - hi = 0)."""
    lo = bp[:-1]
    hi = bp[1:]
    return np.where(x < lo, lo - x, np.where(x >= hi, x - hi, 0.0))


def segment_points(bp: np.ndarray, x: float) -> np.ndarray:
    """Per-segment argmin coordinate: x clamped into [bp[j], bp[j+1])."""
    lo = bp[:-1]
    hi = bp[1:]
    return np.where(x < lo, lo, np.where(x >= hi, hi, x))


def segment_gaps_points(bp: np.ndarray, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Gaps and argmin coordinates in one pass.

    The clamp gives the argmin coordinate; |x - clamp| equals the gap of
    each branch bitwise (x < lo gives |x - lo| = lo - x exactly, x >= hi
    gives x - hi, inside gives +0.0), so results match segment_gaps and
    segment_points.
    """
    pts = np.clip(x, bp[:-1], bp[1:])
    return np.abs(x - pts), pts


def vote_counts(node: Node, vote_mask_ws: np.ndarray) -> np.ndarray:
    """Per-segment count of members voting for the target class."""
    sel = vote_mask_ws[node.local_ids]
    m = node.num_segments
    delta = np.bincount(node.s_rank[sel], minlength=m + 1) - np.bincount(
        node.e_rank[sel], minlength=m + 1
    )
    return np.cumsum(delta)[:m]
