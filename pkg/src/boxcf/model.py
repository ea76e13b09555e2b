"""Core model representation: leaf boxes, aggregation, evaluation, canonical IO.

A fitted tree ensemble is flattened into a list of leaf boxes. Every leaf is a
D-dimensional product of half-open intervals ``[lo, hi)`` together with a
K-vector score and the id of the tree it came from. Dimensions a leaf never
tests span ``(-inf, +inf)``. Within one tree the leaf boxes partition R^D, so
evaluating the ensemble at a point means summing the scores of the containing
leaves and applying the aggregation rule.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ModelConsistencyError, ParseError, UnsupportedFeatureError

AGGREGATION_KINDS = ("identity-sum", "logistic-sum", "softmax-sum")


class Interval(NamedTuple):
    """Half-open interval ``[lo, hi)``; ``lo`` may be -inf and ``hi`` +inf."""

    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x < self.hi

    @property
    def is_empty(self) -> bool:
        return not self.lo < self.hi


FULL_INTERVAL = Interval(-math.inf, math.inf)


@dataclass(frozen=True)
class LeafBox:
    """One leaf of one tree, as an axis-aligned box with a score vector."""

    leaf_id: int
    tree_id: int
    intervals: tuple[Interval, ...]
    score: tuple[float, ...]

    def contains(self, x: Sequence[float]) -> bool:
        return all(iv.contains(float(v)) for iv, v in zip(self.intervals, x))


@dataclass(frozen=True)
class AggregationRule:
    """How summed leaf scores become a model output.

    kind is one of ``identity-sum`` (regression, K = 1), ``logistic-sum``
    (binary, K = 1) or ``softmax-sum`` (K >= 2). base_score is added to every
    class margin before the link function is applied.
    """

    kind: str
    base_score: float = 0.0

    def __post_init__(self):
        if self.kind not in AGGREGATION_KINDS:
            raise UnsupportedFeatureError(
                f"unknown aggregation kind {self.kind!r}; expected one of {AGGREGATION_KINDS}"
            )
        if not math.isfinite(self.base_score):
            raise ModelConsistencyError("base_score must be finite")


@dataclass(frozen=True)
class Prediction:
    """Evaluation result at one point.

    margin is the pre-link sum of leaf scores plus base_score; output is the
    post-link value (probabilities for logistic/softmax, raw value otherwise);
    decision is the predicted class index, or the raw value for regression.
    """

    margin: np.ndarray
    output: np.ndarray
    decision: int | float


def apply_aggregation(rule: AggregationRule, margins: np.ndarray) -> np.ndarray:
    """Map a K-vector of margins to the model output."""
    if rule.kind == "identity-sum":
        return margins.copy()
    if rule.kind == "logistic-sum":
        return 1.0 / (1.0 + np.exp(-margins))
    # softmax, shifted for overflow safety
    shifted = np.exp(margins - margins.max())
    return shifted / shifted.sum()


def decide(rule: AggregationRule, margins: np.ndarray) -> int | float:
    """Class index (or raw value for regression) implied by a margin vector.

    Logistic models predict class 1 iff the margin is >= 0, which is exactly
    sigmoid(margin) >= 1/2 but avoids the link-function rounding. Softmax
    argmax ties resolve to the lowest class index.
    """
    if rule.kind == "identity-sum":
        return float(margins[0])
    if rule.kind == "logistic-sum":
        return int(margins[0] >= 0.0)
    return int(np.argmax(margins))


class EnsembleModel:
    """A tree ensemble flattened to leaf boxes.

    Leaf data lives in read-only numpy arrays indexed by leaf id: ``lows`` and
    ``highs`` of shape (N, D), ``scores`` of shape (N, K) and ``tree_ids`` of
    shape (N,). Construction validates shapes and non-emptiness of every leaf
    interval; it does not verify that each tree's leaves partition R^D (that
    is a property of correctly parsed tree models, checkable by sampling, and
    deliberately not enforced so bare leaf collections can be decomposed too).
    """

    def __init__(
        self,
        lows: np.ndarray,
        highs: np.ndarray,
        scores: np.ndarray,
        tree_ids: np.ndarray,
        aggregation: AggregationRule,
        num_trees: int | None = None,
        feature_names: Sequence[str] | None = None,
    ):
        lows = np.ascontiguousarray(lows, dtype=np.float64)
        highs = np.ascontiguousarray(highs, dtype=np.float64)
        scores = np.ascontiguousarray(scores, dtype=np.float64)
        tree_ids = np.ascontiguousarray(tree_ids, dtype=np.int64)
        if lows.ndim != 2 or lows.shape != highs.shape:
            raise ModelConsistencyError("lows/highs must both have shape (N, D)")
        n, d = lows.shape
        if scores.ndim != 2 or scores.shape[0] != n:
            raise ModelConsistencyError("scores must have shape (N, K)")
        if tree_ids.shape != (n,):
            raise ModelConsistencyError("tree_ids must have shape (N,)")
        if n == 0 or d == 0:
            raise ModelConsistencyError("model needs at least one leaf and one dimension")
        if not np.all(lows < highs):
            bad = int(np.argmax(~np.all(lows < highs, axis=1)))
            raise ModelConsistencyError(
                f"leaf {bad} (tree {int(tree_ids[bad])}) has an empty interval"
            )
        if not np.all(np.isfinite(scores)):
            raise ModelConsistencyError("leaf scores must be finite")
        if np.any(tree_ids < 0):
            raise ModelConsistencyError("tree ids must be nonnegative")
        inferred = int(tree_ids.max()) + 1
        if num_trees is None:
            num_trees = inferred
        elif num_trees < inferred:
            raise ModelConsistencyError(
                f"num_trees={num_trees} but tree id {inferred - 1} present"
            )
        k = scores.shape[1]
        if aggregation.kind == "softmax-sum" and k < 2:
            raise ModelConsistencyError("softmax-sum requires K >= 2")
        if aggregation.kind in ("identity-sum", "logistic-sum") and k != 1:
            raise ModelConsistencyError(f"{aggregation.kind} requires K = 1")
        if feature_names is not None:
            feature_names = list(feature_names)
            if len(feature_names) != d:
                raise ModelConsistencyError("feature_names length must equal dims")
        for arr in (lows, highs, scores, tree_ids):
            arr.setflags(write=False)
        self.lows = lows
        self.highs = highs
        self.scores = scores
        self.tree_ids = tree_ids
        self.aggregation = aggregation
        self.num_trees = num_trees
        self.feature_names = feature_names

    @property
    def num_leaves(self) -> int:
        return self.lows.shape[0]

    @property
    def dims(self) -> int:
        return self.lows.shape[1]

    @property
    def classes(self) -> int:
        return self.scores.shape[1]

    def leaf(self, leaf_id: int) -> LeafBox:
        intervals = tuple(
            Interval(float(lo), float(hi))
            for lo, hi in zip(self.lows[leaf_id], self.highs[leaf_id])
        )
        return LeafBox(
            leaf_id=int(leaf_id),
            tree_id=int(self.tree_ids[leaf_id]),
            intervals=intervals,
            score=tuple(float(s) for s in self.scores[leaf_id]),
        )

    def iter_leaves(self) -> Iterable[LeafBox]:
        return (self.leaf(i) for i in range(self.num_leaves))

    def containing_leaves(self, x: np.ndarray) -> np.ndarray:
        """Boolean mask of leaves whose box contains x (half-open test)."""
        x = np.asarray(x, dtype=np.float64)
        return np.all((self.lows <= x) & (x < self.highs), axis=1)

    def margin(self, x: Sequence[float]) -> np.ndarray:
        """Pre-link margin vector at x: sum of containing-leaf scores + base.

        Scores are summed in ascending leaf-id order; pure regions use the
        identical reduction so raw margins agree bitwise.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dims,):
            raise ValueError(f"point must have shape ({self.dims},)")
        mask = self.containing_leaves(x)
        return self.scores[mask].sum(axis=0) + self.aggregation.base_score

    def predict(self, x: Sequence[float]) -> Prediction:
        margins = self.margin(x)
        return Prediction(
            margin=margins,
            output=apply_aggregation(self.aggregation, margins),
            decision=decide(self.aggregation, margins),
        )

    def to_dict(self) -> dict:
        """Canonical JSON-ready representation (infinities as strings)."""
        doc = {
            "dims": self.dims,
            "classes": self.classes,
            "num_trees": self.num_trees,
            "aggregation": {
                "kind": self.aggregation.kind,
                "base_score": self.aggregation.base_score,
            },
            "leaves": [
                {
                    "tree": int(self.tree_ids[i]),
                    "intervals": [
                        [_encode_bound(lo), _encode_bound(hi)]
                        for lo, hi in zip(self.lows[i], self.highs[i])
                    ],
                    "score": [float(s) for s in self.scores[i]],
                }
                for i in range(self.num_leaves)
            ],
        }
        if self.feature_names is not None:
            doc["feature_names"] = list(self.feature_names)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "EnsembleModel":
        try:
            dims = int(doc["dims"])
            classes = int(doc["classes"])
            num_trees = int(doc["num_trees"])
            agg_doc = doc["aggregation"]
            rule = AggregationRule(
                kind=str(agg_doc["kind"]),
                base_score=float(agg_doc.get("base_score", 0.0)),
            )
            leaves = doc["leaves"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed canonical model document: {exc}") from exc
        n = len(leaves)
        if n == 0:
            raise ModelConsistencyError("canonical model has no leaves")
        lows = np.empty((n, dims))
        highs = np.empty((n, dims))
        scores = np.empty((n, classes))
        tree_ids = np.empty(n, dtype=np.int64)
        for i, leaf in enumerate(leaves):
            try:
                tree_ids[i] = int(leaf["tree"])
                ivs = leaf["intervals"]
                sc = leaf["score"]
                if len(ivs) != dims:
                    raise ValueError(f"leaf {i} has {len(ivs)} intervals, expected {dims}")
                if len(sc) != classes:
                    raise ValueError(f"leaf {i} has {len(sc)} scores, expected {classes}")
                for d, (lo, hi) in enumerate(ivs):
                    lows[i, d] = _decode_bound(lo)
                    highs[i, d] = _decode_bound(hi)
                scores[i] = [float(v) for v in sc]
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed leaf {i}: {exc}") from exc
        return cls(
            lows,
            highs,
            scores,
            tree_ids,
            rule,
            num_trees=num_trees,
            feature_names=doc.get("feature_names"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "EnsembleModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"invalid JSON at byte offset {exc.pos}: {exc.msg}"
            ) from exc
        if not isinstance(doc, dict):
            raise ParseError("canonical model document must be a JSON object")
        return cls.from_dict(doc)

    def save(self, fp: IO[str] | str) -> None:
        if isinstance(fp, str):
            with open(fp, "w") as fh:
                fh.write(self.to_json())
        else:
            fp.write(self.to_json())

    @classmethod
    def load(cls, fp: IO[str] | str) -> "EnsembleModel":
        if isinstance(fp, str):
            with open(fp) as fh:
                return cls.from_json(fh.read())
        return cls.from_json(fp.read())

    def digest(self) -> str:
        """Stable content hash of the canonical representation."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def presort_index(self) -> list:
        """Per-dimension sorted endpoint events, built once per model.

        Every decomposition and query workspace filters this index instead
        of re-sorting: subset selection preserves sort order. Concurrent
        first calls may build it twice; both results are identical.
        """
        cache = self.__dict__.get("_presorts")
        if cache is None:
            from .sweep import presort_dimensions

            cache = presort_dimensions(self)
            self.__dict__["_presorts"] = cache
        return cache


def _encode_bound(v: float) -> float | str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return float(v)


def _decode_bound(v) -> float:
    if isinstance(v, str):
        if v == "inf":
            return math.inf
        if v == "-inf":
            return -math.inf
        raise ValueError(f"bad interval bound {v!r}")
    out = float(v)
    if math.isnan(out):
        raise ValueError("NaN interval bound")
    return out


def evaluate(model: EnsembleModel, x: Sequence[float]) -> tuple[np.ndarray, int | float]:
    """Evaluate the ensemble at x.

    Returns the post-aggregation score vector and the decision (class index,
    or raw value for regression).
    """
    pred = model.predict(x)
    return pred.output, pred.decision
