"""One-dimensional maximal-intersection sweep over half-open intervals.

Given n nonempty intervals ``[lo, hi)``, the sweep cuts the line at every
distinct endpoint and reports each resulting elementary segment together with
the exact set of intervals covering its interior. Consecutive distinct
endpoints bound each segment, so at most ``2n - 1`` segments come out, and
endpoint comparison is exact float equality (coincident endpoints merge, and
no epsilon snapping ever happens). Segments covered by no interval are
omitted.

The sort is the only superlinear step, so for repeated sweeps over subsets of
one fixed interval family (the search engine's inner loop), a per-dimension
presorted endpoint index can be built once and filtered per subset, keeping
every later sweep linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .leafset import LeafSet
from .model import EnsembleModel, Interval


@dataclass(frozen=True)
class ElementaryInterval:
    """One segment of a 1-D decomposition: its span and the covering ids."""

    span: Interval
    members: LeafSet


@dataclass(frozen=True)
class DimPresort:
    """Endpoint events of one dimension, sorted ascending by value.

    Arrays have length 2n: event k is the start (``is_end`` False) or end
    (True) of interval ``leaf[k]`` at ``value[k]``. Filtering the three
    arrays by any membership mask preserves the sort order, which is what
    makes subset sweeps linear.
    """

    value: np.ndarray
    leaf: np.ndarray
    is_end: np.ndarray

    @classmethod
    def build(cls, lows: np.ndarray, highs: np.ndarray) -> "DimPresort":
        n = lows.shape[0]
        value = np.concatenate([lows, highs])
        leaf = np.concatenate([np.arange(n), np.arange(n)]).astype(np.int64)
        is_end = np.concatenate([np.zeros(n, dtype=bool), np.ones(n, dtype=bool)])
        order = np.argsort(value, kind="stable")
        return cls(value=value[order], leaf=leaf[order], is_end=is_end[order])

    def select(self, member_mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Events of the member subset, still sorted (no re-sort needed)."""
        keep = member_mask[self.leaf]
        return self.value[keep], self.leaf[keep], self.is_end[keep]


def presort_dimensions(model: EnsembleModel) -> list[DimPresort]:
    """Per-dimension sorted endpoint indexes for all leaves of a model."""
    return [DimPresort.build(model.lows[:, d], model.highs[:, d]) for d in range(model.dims)]


def sweep_events(
    value: np.ndarray, leaf_local: np.ndarray, is_end: np.ndarray, n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Core sweep over value-sorted events of n intervals.

    ``leaf_local`` must index intervals as 0..n-1. Returns
    ``(breakpoints, start_rank, end_rank)`` where breakpoints are the m+1
    distinct endpoint values and interval i covers exactly the segments
    ``start_rank[i] .. end_rank[i] - 1`` (segment j spans
    ``[breakpoints[j], breakpoints[j+1])``).
    """
    if n == 0:
        return np.empty(0), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    newval = np.empty(value.shape[0], dtype=bool)
    newval[0] = True
    np.greater(value[1:], value[:-1], out=newval[1:])
    rank = np.cumsum(newval) - 1
    breakpoints = value[newval]
    start_rank = np.empty(n, dtype=np.int64)
    end_rank = np.empty(n, dtype=np.int64)
    start_rank[leaf_local[~is_end]] = rank[~is_end]
    end_rank[leaf_local[is_end]] = rank[is_end]
    return breakpoints, start_rank, end_rank


def segment_counts(breakpoints: np.ndarray, start_rank: np.ndarray, end_rank: np.ndarray) -> np.ndarray:
    """Number of covering intervals per segment (length m)."""
    m = breakpoints.shape[0] - 1
    delta = np.bincount(start_rank, minlength=m + 1) - np.bincount(
        end_rank, minlength=m + 1
    )
    return np.cumsum(delta)[:m]


def intersect1d(
    intervals: Sequence[Interval] | np.ndarray,
    ids: Sequence[int] | np.ndarray | None = None,
    presorted: DimPresort | None = None,
    universe: int | None = None,
) -> list[ElementaryInterval]:
    """Decompose 1-D intervals into elementary segments with member sets.

    ``intervals`` is the full interval family, as (n, 2) array-like.
    ``ids`` optionally restricts the sweep to a subset of indices into that
    family; member sets are always expressed over the full family (size
    ``universe``, default n). When ``presorted`` is given (built over the
    same family), the endpoint sort is skipped.
    """
    arr = np.asarray(intervals, dtype=np.float64)
    if arr.size == 0:
        return []
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("intervals must be an (n, 2) array of [lo, hi) pairs")
    if not np.all(arr[:, 0] < arr[:, 1]):
        raise ValueError("all intervals must be nonempty (lo < hi)")
    n_family = arr.shape[0]
    size = n_family if universe is None else universe

    if ids is None:
        subset = np.arange(n_family)
    else:
        subset = np.asarray(ids, dtype=np.int64)
        if subset.size == 0:
            return []

    if presorted is None:
        pre = DimPresort.build(arr[subset, 0], arr[subset, 1])
        value, leaf_local, is_end = pre.value, pre.leaf, pre.is_end
    else:
        member_mask = np.zeros(n_family, dtype=bool)
        member_mask[subset] = True
        value, leaf_global, is_end = presorted.select(member_mask)
        # reindex family ids to subset-local positions 0..n-1
        local_of = np.empty(n_family, dtype=np.int64)
        local_of[subset] = np.arange(subset.shape[0])
        leaf_local = local_of[leaf_global]

    n = subset.shape[0]
    breakpoints, start_rank, end_rank = sweep_events(value, leaf_local, is_end, n)
    counts = segment_counts(breakpoints, start_rank, end_rank)

    out = []
    for j in np.flatnonzero(counts > 0):
        members_local = (start_rank <= j) & (j < end_rank)
        members = LeafSet.from_ids(subset[members_local], size)
        out.append(
            ElementaryInterval(
                span=Interval(float(breakpoints[j]), float(breakpoints[j + 1])),
                members=members,
            )
        )
    return out
