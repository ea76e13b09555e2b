"""Region decomposition: purity, coverage, bounds, containment, export."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from boxcf import (
    DecompositionTooLargeError,
    Interval,
    LeafSet,
    apply_aggregation,
    containing_region,
    decide,
    decompose,
    dist_to_box,
    dist_to_boxes,
    export_regions_jsonl,
)
from conftest import random_small_model
from oracles import canonical_margin, containing_mask, inner_point


def region_midpoint(region):
    return [inner_point(iv.lo, iv.hi) for iv in region.box]


class TestDistToBox:
    def test_inside_is_zero(self):
        sq, point = dist_to_box([0.5, 0.5], [0.0, 0.0], [1.0, 1.0])
        assert sq == 0.0
        assert point.tolist() == [0.5, 0.5]

    def test_gaps_on_both_sides(self):
        sq, point = dist_to_box([-1.0, 3.0], [0.0, 0.0], [1.0, 1.0])
        assert sq == 1.0 + 4.0
        assert point.tolist() == [0.0, 1.0]

    def test_upper_face_is_excluded_but_clamped(self):
        sq, point = dist_to_box([1.0], [0.0], [1.0])
        assert sq == 0.0
        assert point.tolist() == [1.0]

    def test_weights_scale_terms(self):
        sq, _ = dist_to_box([-2.0, 2.0], [0.0, 0.0], [1.0, 1.0], weights=[3.0, 0.5])
        assert sq == 3.0 * 4.0 + 0.5 * 1.0

    def test_accumulation_is_left_to_right(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            d = int(rng.integers(1, 8))
            x = rng.uniform(-5, 5, d)
            lows = rng.uniform(-4, 0, d)
            highs = lows + rng.uniform(0.1, 3, d)
            w = rng.uniform(0.1, 3, d)
            sq, _ = dist_to_box(x, lows, highs, w)
            acc = 0.0
            for i in range(d):
                gap = lows[i] - x[i] if x[i] < lows[i] else (x[i] - highs[i] if x[i] >= highs[i] else 0.0)
                acc = acc + w[i] * (gap * gap)
            assert sq == acc

    def test_vectorized_matches_scalar_bitwise(self):
        rng = np.random.default_rng(32)
        x = rng.uniform(-5, 5, 4)
        lows = rng.uniform(-4, 0, (30, 4))
        highs = lows + rng.uniform(0.1, 3, (30, 4))
        w = rng.uniform(0.1, 3, 4)
        dists = dist_to_boxes(x, lows, highs, w)
        for r in range(30):
            sq, _ = dist_to_box(x, lows[r], highs[r], w)
            assert dists[r] == sq


class TestFigureDecomposition:
    EXPECTED = [
        ((0.0, 1.0), (0.0, 2.0), {0}, -1.0),
        ((1.0, 2.0), (0.0, 1.0), {0}, -1.0),
        ((1.0, 2.0), (1.0, 2.0), {0, 1}, 0.0),
        ((1.0, 2.0), (2.0, 3.0), {1}, 1.0),
        ((2.0, 3.0), (1.0, 3.0), {1}, 1.0),
    ]

    def test_exactly_five_pure_boxes(self, figure_pair):
        regions = decompose(figure_pair)
        got = [
            (
                (r.box[0].lo, r.box[0].hi),
                (r.box[1].lo, r.box[1].hi),
                set(r.members.ids().tolist()),
                float(r.margin[0]),
            )
            for r in regions
        ]
        assert got == self.EXPECTED

    def test_boxes_are_disjoint_and_cover_the_union(self, figure_pair):
        regions = decompose(figure_pair)
        for i in range(len(regions)):
            for j in range(i + 1, len(regions)):
                a, b = regions[i].box, regions[j].box
                overlaps = all(
                    max(a[d].lo, b[d].lo) < min(a[d].hi, b[d].hi) for d in range(2)
                )
                assert not overlaps
        area = sum(
            (r.box[0].hi - r.box[0].lo) * (r.box[1].hi - r.box[1].lo) for r in regions
        )
        assert area == 7.0  # |A| + |B| - |A and B| = 4 + 4 - 1
        rng = np.random.default_rng(33)
        pts = rng.uniform(-0.5, 3.5, (500, 2))
        for p in pts:
            in_union = (0 <= p[0] < 2 and 0 <= p[1] < 2) or (
                1 <= p[0] < 3 and 1 <= p[1] < 3
            )
            hits = sum(r.contains(p) for r in regions)
            assert hits == (1 if in_union else 0)


class TestDecompose:
    def test_regions_match_membership_oracle(self):
        rng = np.random.default_rng(34)
        for _ in range(25):
            model = random_small_model(rng)
            regions = decompose(model)
            for region in regions:
                mid = region_midpoint(region)
                mask = containing_mask(model, mid)
                assert np.array_equal(region.members.to_mask(), mask)
                assert np.array_equal(region.margin, canonical_margin(model, mask))
                assert np.array_equal(
                    region.score, apply_aggregation(model.aggregation, region.margin)
                )
                assert region.klass == decide(model.aggregation, region.margin)

    def test_region_count_bound(self):
        rng = np.random.default_rng(35)
        for _ in range(20):
            model = random_small_model(rng)
            regions = decompose(model)
            n, d = model.num_leaves, model.dims
            assert len(regions) <= (2 * n - 1) ** d

    def test_emission_order_is_deterministic(self):
        rng = np.random.default_rng(36)
        model = random_small_model(rng)
        a = decompose(model)
        b = decompose(model)
        assert [r.box for r in a] == [r.box for r in b]
        assert [r.members for r in a] == [r.members for r in b]

    def test_leaf_filter_restricts_the_family(self, figure_pair):
        regions = decompose(figure_pair, leaf_filter=[1])
        assert len(regions) == 1
        assert regions[0].box == (Interval(1.0, 3.0), Interval(1.0, 3.0))
        assert regions[0].members.ids().tolist() == [1]
        as_set = decompose(
            figure_pair, leaf_filter=LeafSet.from_ids([1], size=2)
        )
        assert as_set[0].box == regions[0].box

    def test_region_cap_raises_with_counts(self, figure_pair):
        with pytest.raises(DecompositionTooLargeError) as exc:
            decompose(figure_pair, max_regions=3)
        assert exc.value.cap == 3
        assert exc.value.emitted == 3

    def test_empty_filter_yields_no_regions(self, figure_pair):
        assert decompose(figure_pair, leaf_filter=[]) == []


class TestContainingRegion:
    def test_agrees_with_decompose(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            model = random_small_model(rng)
            regions = decompose(model)
            for _ in range(20):
                x = rng.uniform(-5, 5, model.dims)
                region = containing_region(model, x)
                assert region.contains(x)
                hits = [r for r in regions if r.contains(x)]
                assert len(hits) == 1
                assert hits[0].box == region.box
                assert hits[0].members == region.members
                assert np.array_equal(hits[0].margin, region.margin)

    def test_point_outside_every_leaf(self, figure_pair):
        region = containing_region(figure_pair, [10.0, 10.0])
        assert region.members.count == 0
        assert region.contains([10.0, 10.0])
        assert region.margin.tolist() == [0.0]

    def test_pure_cell_boundaries(self, figure_pair):
        region = containing_region(figure_pair, [1.0, 1.0])
        assert region.box == (Interval(1.0, 2.0), Interval(1.0, 2.0))
        assert set(region.members.ids().tolist()) == {0, 1}


class TestExport:
    def test_jsonl_lines_round_trip(self, tmp_path, figure_pair):
        regions = decompose(figure_pair)
        path = tmp_path / "regions.jsonl"
        export_regions_jsonl(regions, str(path))
        lines = path.read_text().splitlines()
        assert len(lines) == len(regions)
        first = json.loads(lines[0])
        assert first["box"] == [[0.0, 1.0], [0.0, 2.0]]
        assert first["member_leaf_ids"] == [0]
        assert "score" in first and "class" in first

    def test_infinities_encode_as_strings(self, tmp_path, figure_trees):
        regions = decompose(figure_trees)
        path = tmp_path / "regions.jsonl"
        export_regions_jsonl(regions, str(path))
        text = path.read_text()
        assert "Infinity" not in text
        assert '"-inf"' in text
