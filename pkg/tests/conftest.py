"""Shared fixtures: hand-built two-box models and a seeded instance factory."""

from __future__ import annotations

import math

import numpy as np
import pytest

from boxcf import (
    AggregationRule,
    CfQuery,
    CfTarget,
    EnsembleModel,
    RandomModelSpec,
    generate_model,
    ingest,
)


def build_model(lows, highs, scores, tree_ids, kind="identity-sum", base=0.0, **kw):
    """EnsembleModel from plain lists (bare leaf collections welcome)."""
    return EnsembleModel(
        np.asarray(lows, dtype=float),
        np.asarray(highs, dtype=float),
        np.asarray(scores, dtype=float),
        np.asarray(tree_ids, dtype=np.int64),
        AggregationRule(kind=kind, base_score=base),
        **kw,
    )


def box_tree_dump(a, b, score):
    """A complete tree scoring ``score`` on [a, b) x [a, b) and 0 elsewhere."""
    return {
        "nodeid": 0,
        "split": "f0",
        "split_condition": a,
        "yes": 1,
        "no": 2,
        "children": [
            {"nodeid": 1, "leaf": 0.0},
            {
                "nodeid": 2,
                "split": "f0",
                "split_condition": b,
                "yes": 3,
                "no": 4,
                "children": [
                    {
                        "nodeid": 3,
                        "split": "f1",
                        "split_condition": a,
                        "yes": 5,
                        "no": 6,
                        "children": [
                            {"nodeid": 5, "leaf": 0.0},
                            {
                                "nodeid": 6,
                                "split": "f1",
                                "split_condition": b,
                                "yes": 7,
                                "no": 8,
                                "children": [
                                    {"nodeid": 7, "leaf": score},
                                    {"nodeid": 8, "leaf": 0.0},
                                ],
                            },
                        ],
                    },
                    {"nodeid": 4, "leaf": 0.0},
                ],
            },
        ],
    }


@pytest.fixture
def figure_pair():
    """Two overlapping scored boxes as a bare leaf collection:
    [0, 2)^2 scoring -1 (tree 0) and [1, 3)^2 scoring +1 (tree 1)."""
    return build_model(
        lows=[[0.0, 0.0], [1.0, 1.0]],
        highs=[[2.0, 2.0], [3.0, 3.0]],
        scores=[[-1.0], [1.0]],
        tree_ids=[0, 1],
    )


@pytest.fixture
def figure_trees():
    """The same two scored boxes embedded in complete two-tree model form
    (zero-score complement leaves), so per-tree coverage holds everywhere."""
    dump = [box_tree_dump(0.0, 2.0, -1.0), box_tree_dump(1.0, 3.0, 1.0)]
    return ingest(dump)


def random_small_model(rng) -> EnsembleModel:
    """A seeded model within the small-instance envelope (trees <= 8,
    split depth <= 3, D <= 4, K in {1, 2, 3})."""
    dims = int(rng.integers(1, 5))
    classes = int(rng.integers(1, 4))
    if classes == 1:
        aggregation = "identity-sum" if rng.random() < 0.5 else "logistic-sum"
        num_trees = int(rng.integers(1, 9))
    else:
        aggregation = "softmax-sum"
        num_trees = int(rng.integers(classes, 9))
    spec = RandomModelSpec(
        seed=int(rng.integers(0, 2**31)),
        dims=dims,
        classes=classes,
        num_trees=num_trees,
        min_depth=1,
        max_depth=int(rng.integers(1, 4)),
        threshold_pool=int(rng.integers(3, 10)),
        base_score=float(rng.normal(0.0, 0.5)) if rng.random() < 0.3 else 0.0,
        aggregation=aggregation,
    )
    return generate_model(spec)


def random_target(rng, model, x) -> CfTarget:
    """A target of a kind valid for the model, usually not satisfied at x."""
    kind = model.aggregation.kind
    pred = model.predict(x)
    if kind == "identity-sum":
        v = float(pred.output[0])
        r = rng.random()
        if r < 0.25:
            return CfTarget.score_interval(v + rng.uniform(0.3, 2.5), math.inf)
        if r < 0.5:
            return CfTarget.score_interval(-math.inf, v - rng.uniform(0.3, 2.5))
        lo = v + rng.uniform(0.3, 2.5) * (1 if rng.random() < 0.5 else -1)
        return CfTarget.score_interval(lo, lo + rng.uniform(0.2, 2.0))
    if kind == "logistic-sum":
        r = rng.random()
        if r < 0.4:
            return CfTarget.for_class(1 - int(pred.decision))
        if r < 0.7:
            side = "le" if rng.random() < 0.5 else "ge"
            return CfTarget.probability_threshold(float(rng.uniform(0.1, 0.9)), side)
        return CfTarget.score_interval(
            float(rng.uniform(0.0, 0.4)), float(rng.uniform(0.5, 1.0))
        )
    others = [c for c in range(model.classes) if c != int(pred.decision)]
    if rng.random() < 0.7:
        return CfTarget.for_class(int(rng.choice(others)))
    return CfTarget.for_class(int(rng.integers(0, model.classes)))


def satisfied_target(model, x) -> CfTarget:
    """A target the point x already meets (exercises the zero-distance path)."""
    pred = model.predict(x)
    if model.aggregation.kind == "identity-sum":
        v = float(pred.output[0])
        return CfTarget.score_interval(v - 0.5, v + 0.5)
    return CfTarget.for_class(int(pred.decision))


def oracle_instance(seed: int):
    """One seeded small model plus five queries spanning the query surface:
    two plain targets, one weighted, one already satisfied, one restricted."""
    rng = np.random.default_rng(seed)
    model = random_small_model(rng)
    dims = model.dims
    queries = []
    for j in range(5):
        x = rng.uniform(-5.0, 5.0, dims)
        target = random_target(rng, model, x)
        weights = None
        fixed = ()
        if j == 2:
            weights = rng.uniform(0.25, 4.0, dims)
        elif j == 3:
            target = satisfied_target(model, x)
        elif j == 4 and dims >= 2:
            count = int(rng.integers(1, dims))
            fixed = tuple(sorted(rng.choice(dims, size=count, replace=False).tolist()))
        queries.append(CfQuery(x=x, target=target, weights=weights, fixed_dims=fixed))
    return model, queries


@pytest.fixture(scope="session")
def oracle_suite():
    """500 seeded small models, five queries each, shared across tests."""
    return [oracle_instance(1000 + i) for i in range(500)]
