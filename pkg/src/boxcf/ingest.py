"""Parse gradient-boosting tree dumps into leaf-box models.

Supported source formats:

* ``gbdt-json-dump``: the JSON array-of-trees layout produced by mainstream
  boosting libraries' ``dump_model``-style exports. Internal nodes carry
  ``split`` / ``split_condition`` / ``yes`` / ``no`` (optionally ``missing``,
  which is accepted and dropped) and leaves carry ``leaf``. The yes branch
  means ``x < threshold``, the no branch ``x >= threshold``; folding a
  root-to-leaf path therefore shrinks ``hi`` on yes edges and ``lo`` on no
  edges, which yields exactly the half-open boxes the geometry layer expects.
* ``canonical``: this package's own JSON layout (see model.EnsembleModel).

Only numeric splits are supported; categorical splits raise
UnsupportedFeatureError. Multiclass dumps use the usual round-robin
tree-to-class assignment: tree t votes for class ``t % K`` and its leaf score
becomes a K-vector with a single nonzero entry.
"""

from __future__ import annotations

import json
import math
from typing import IO, Sequence

import numpy as np

from .errors import ModelConsistencyError, ParseError, UnsupportedFeatureError
from .model import AggregationRule, EnsembleModel

FORMATS = ("gbdt-json-dump", "canonical")


def ingest(
    source: str | IO[str] | list | dict,
    format: str = "gbdt-json-dump",
    *,
    classes: int = 1,
    aggregation: str | AggregationRule | None = None,
    base_score: float = 0.0,
    dims: int | None = None,
    feature_names: Sequence[str] | None = None,
) -> EnsembleModel:
    """Build an EnsembleModel from a model dump.

    ``source`` may be a JSON string, an open file, or already-decoded JSON.
    ``classes``, ``aggregation`` and ``base_score`` are format options for
    dumps that do not carry them; ``aggregation`` defaults to identity-sum
    for K = 1 and softmax-sum otherwise. ``dims`` widens the feature space
    beyond the largest split index seen (split-free trailing dimensions).
    """
    if format == "canonical":
        if isinstance(source, dict):
            return EnsembleModel.from_dict(source)
        return EnsembleModel.from_json(_read_text(source))
    if format != "gbdt-json-dump":
        raise UnsupportedFeatureError(f"unknown model format {format!r}")

    doc = source if isinstance(source, (list, dict)) else _decode_json(_read_text(source))
    trees = _tree_list(doc)
    if classes < 1:
        raise ParseError(f"classes must be >= 1, got {classes}")
    rule = _resolve_rule(aggregation, classes, base_score)

    boxes: list[dict[int, list[float]]] = []
    values: list[float] = []
    tree_of: list[int] = []
    max_dim = -1
    for t, tree in enumerate(trees):
        for box, value in _walk_tree(tree, t, feature_names):
            boxes.append(box)
            values.append(value)
            tree_of.append(t)
            if box:
                max_dim = max(max_dim, max(box))

    d = max_dim + 1
    if feature_names is not None:
        if len(feature_names) < d:
            raise ParseError(
                f"feature_names has {len(feature_names)} entries but split on dim {d - 1}"
            )
        d = len(feature_names)
    if dims is not None:
        if dims < d:
            raise ParseError(f"dims={dims} but a split references dim {d - 1}")
        d = dims
    if d == 0:
        d = 1  # split-free model: keep a single unconstrained dimension

    n = len(boxes)
    lows = np.full((n, d), -math.inf)
    highs = np.full((n, d), math.inf)
    scores = np.zeros((n, classes))
    for i, box in enumerate(boxes):
        for dim, (lo, hi) in box.items():
            lows[i, dim] = lo
            highs[i, dim] = hi
        scores[i, tree_of[i] % classes] = values[i]
    return EnsembleModel(
        lows,
        highs,
        scores,
        np.asarray(tree_of, dtype=np.int64),
        rule,
        num_trees=len(trees),
        feature_names=feature_names,
    )


def _resolve_rule(
    aggregation: str | AggregationRule | None, classes: int, base_score: float
) -> AggregationRule:
    if isinstance(aggregation, AggregationRule):
        return aggregation
    if aggregation is None:
        aggregation = "identity-sum" if classes == 1 else "softmax-sum"
    return AggregationRule(kind=aggregation, base_score=base_score)


def _read_text(source: str | IO[str]) -> str:
    if isinstance(source, str):
        return source
    return source.read()


def _decode_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at byte offset {exc.pos}: {exc.msg}") from exc


def _tree_list(doc) -> list:
    # Accept either a bare array of trees or a {"trees": [...]} wrapper.
    if isinstance(doc, dict) and "trees" in doc:
        doc = doc["trees"]
    if not isinstance(doc, list):
        raise ParseError("gbdt dump must be a JSON array of trees")
    return doc


def _split_dim(split, feature_names: Sequence[str] | None, where: str) -> int:
    if feature_names is not None and split in feature_names:
        return list(feature_names).index(split)
    if isinstance(split, int):
        return split
    if isinstance(split, str):
        name = split[1:] if split.startswith("f") else split
        if name.isdigit():
            return int(name)
    raise UnsupportedFeatureError(f"{where}: cannot map split field {split!r} to a dimension")


def _walk_tree(root, tree_id: int, feature_names: Sequence[str] | None):
    """Yield (box, leaf_value) for every leaf, depth-first with yes first.

    box maps dim -> [lo, hi); dims never split stay implicit (full line).
    """
    if not isinstance(root, dict):
        raise ParseError(f"tree {tree_id}: node must be a JSON object")
    stack = [(root, {}, "root")]
    while stack:
        node, box, path = stack.pop()
        where = f"tree {tree_id}, node {path}"
        if not isinstance(node, dict):
            raise ParseError(f"{where}: node must be a JSON object")
        if "leaf" in node:
            value = node["leaf"]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ParseError(f"{where}: leaf value {value!r} is not numeric")
            yield box, float(value)
            continue
        if "split" not in node:
            raise ParseError(f"{where}: neither leaf nor split node")
        threshold = node.get("split_condition")
        if not isinstance(threshold, (int, float)) or isinstance(threshold, bool):
            raise UnsupportedFeatureError(
                f"{where}: non-numeric split_condition {threshold!r} (categorical splits unsupported)"
            )
        threshold = float(threshold)
        dim = _split_dim(node["split"], feature_names, where)
        children = node.get("children")
        if not isinstance(children, list) or len(children) != 2:
            raise ParseError(f"{where}: split node must have exactly two children")
        by_id = {}
        for child in children:
            if not isinstance(child, dict) or "nodeid" not in child:
                raise ParseError(f"{where}: child without nodeid")
            by_id[child["nodeid"]] = child
        try:
            yes_child = by_id[node["yes"]]
            no_child = by_id[node["no"]]
        except KeyError as exc:
            raise ParseError(f"{where}: yes/no points to missing child {exc}") from exc

        lo, hi = box.get(dim, (-math.inf, math.inf))
        # yes: x < t, no: x >= t; an empty fold means a contradictory path
        yes_box = dict(box)
        yes_box[dim] = (lo, min(hi, threshold))
        if not yes_box[dim][0] < yes_box[dim][1]:
            raise ModelConsistencyError(
                f"{where}: contradictory path, dim {dim} interval "
                f"[{yes_box[dim][0]}, {yes_box[dim][1]}) is empty"
            )
        no_box = dict(box)
        no_box[dim] = (max(lo, threshold), hi)
        if not no_box[dim][0] < no_box[dim][1]:
            raise ModelConsistencyError(
                f"{where}: contradictory path, dim {dim} interval "
                f"[{no_box[dim][0]}, {no_box[dim][1]}) is empty"
            )
        # push no first so the yes branch is emitted first (stable leaf order)
        stack.append((no_child, no_box, f"{path}.no"))
        stack.append((yes_child, yes_box, f"{path}.yes"))
