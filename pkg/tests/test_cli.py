"""Command line: conversion, queries, validation, byte-reproducible output."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from boxcf import (
    CfQuery,
    CfTarget,
    EnsembleModel,
    RandomModelSpec,
    cf_query,
    cf_set,
    evaluate,
    generate_dump,
    generate_model,
)
from boxcf.cli import main
from conftest import build_model


@pytest.fixture
def reg_model_path(tmp_path):
    model = generate_model(RandomModelSpec(seed=90, dims=3, num_trees=6, max_depth=3))
    path = tmp_path / "reg.json"
    model.save(str(path))
    return str(path), model


@pytest.fixture
def logit_model_path(tmp_path):
    model = generate_model(
        RandomModelSpec(seed=91, dims=2, num_trees=5, aggregation="logistic-sum")
    )
    path = tmp_path / "logit.json"
    model.save(str(path))
    return str(path), model


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConvert:
    def test_convert_writes_canonical_model(self, tmp_path, capsys):
        dump = generate_dump(RandomModelSpec(seed=92, dims=2, num_trees=4))
        src = tmp_path / "dump.json"
        src.write_text(json.dumps(dump))
        dst = tmp_path / "model.json"
        code, out, _ = run(capsys, ["convert", str(src), str(dst)])
        assert code == 0
        assert out.strip() == "leaves={} dims={} classes={} trees={}".format(
            EnsembleModel.load(str(dst)).num_leaves, 2, 1, 4
        )

    def test_convert_options(self, tmp_path, capsys):
        dump = generate_dump(RandomModelSpec(seed=93, dims=2, classes=2, num_trees=4))
        src = tmp_path / "dump.json"
        src.write_text(json.dumps(dump))
        dst = tmp_path / "model.json"
        code, out, _ = run(
            capsys,
            [
                "convert", str(src), str(dst),
                "--classes", "2", "--aggregation", "softmax-sum",
                "--base-score", "0.5", "--dims", "4",
                "--feature-names", "a,b,c,d",
            ],
        )
        assert code == 0
        model = EnsembleModel.load(str(dst))
        assert model.classes == 2
        assert model.dims == 4
        assert model.aggregation.base_score == 0.5
        assert model.feature_names == ["a", "b", "c", "d"]

    def test_convert_parse_error_exits_1(self, tmp_path, capsys):
        src = tmp_path / "bad.json"
        src.write_text("{nope")
        code, _, err = run(capsys, ["convert", str(src), str(tmp_path / "out.json")])
        assert code == 1
        assert "error:" in err

    def test_missing_file_exits_1(self, tmp_path, capsys):
        code, _, err = run(
            capsys, ["convert", str(tmp_path / "absent.json"), str(tmp_path / "o.json")]
        )
        assert code == 1
        assert "error:" in err


class TestEvaluate:
    def test_payload_matches_library(self, reg_model_path, capsys):
        path, model = reg_model_path
        code, out, _ = run(capsys, ["evaluate", path, "--x", "0.5,-1.0,2.0"])
        assert code == 0
        doc = json.loads(out)
        output, decision = evaluate(model, [0.5, -1.0, 2.0])
        assert doc["output"] == [float(v) for v in output]
        assert doc["value"] == decision
        assert "margin" in doc

    def test_bad_point_exits_1(self, reg_model_path, capsys):
        path, _ = reg_model_path
        code, _, err = run(capsys, ["evaluate", path, "--x", "1,zap,3"])
        assert code == 1
        assert "bad point" in err


class TestCfCommand:
    def target_args(self, model, x):
        v = float(model.predict(np.asarray(x)).output[0])
        hi = v + 0.5
        return [f"--target-interval={hi}:inf"], CfTarget.score_interval(hi, math.inf)

    def test_point_query_matches_library(self, reg_model_path, capsys):
        path, model = reg_model_path
        flags, target = self.target_args(model, [0.0, 0.0, 0.0])
        code, out, _ = run(capsys, ["cf", path, "--x", "0,0,0", *flags])
        doc = json.loads(out)
        want = cf_query(model, CfQuery(x=[0.0, 0.0, 0.0], target=target))
        if want is None:
            assert code == 2
            assert doc["status"] == "not_found"
        else:
            assert code == 0
            assert doc["status"] == "ok"
            assert doc["point"] == [float(v) for v in want.point]
            assert doc["sq_dist"] == want.sq_dist
            assert doc["dist"] == math.sqrt(want.sq_dist)
            assert doc["region"]["member_leaf_ids"] == [
                int(i) for i in want.region.members.ids()
            ]
            assert "stats" not in doc

    def test_not_found_exits_2(self, reg_model_path, capsys):
        path, _ = reg_model_path
        code, out, _ = run(
            capsys, ["cf", path, "--x", "0,0,0", "--target-interval", "1e9:2e9"]
        )
        assert code == 2
        assert json.loads(out) == {"status": "not_found"}

    def test_byte_determinism_across_runs_and_workers(self, reg_model_path, capsys):
        path, model = reg_model_path
        flags, _ = self.target_args(model, [0.0, 0.0, 0.0])
        base_argv = ["cf", path, "--x", "0,0,0", *flags]
        _, first, _ = run(capsys, base_argv)
        _, second, _ = run(capsys, base_argv)
        _, with_one, _ = run(capsys, [*base_argv, "--workers", "1"])
        _, with_four, _ = run(capsys, [*base_argv, "--workers", "4"])
        assert first == second == with_one == with_four

    def test_stats_flag_attaches_stats(self, reg_model_path, capsys):
        path, model = reg_model_path
        flags, _ = self.target_args(model, [0.0, 0.0, 0.0])
        _, out, _ = run(capsys, ["cf", path, "--x", "0,0,0", *flags, "--stats"])
        doc = json.loads(out)
        assert "stats" in doc
        assert doc["stats"]["explored_nodes"] >= 0

    def test_query_file_with_flag_overrides(self, reg_model_path, tmp_path, capsys):
        path, model = reg_model_path
        qfile = tmp_path / "query.json"
        qfile.write_text(
            json.dumps(
                {
                    "x": [5.0, 5.0, 5.0],
                    "target": {"kind": "interval", "low": -1.0, "high": 1.0},
                    "weights": [1.0, 1.0, 1.0],
                }
            )
        )
        code, out, _ = run(
            capsys,
            [
                "cf", path, "--query", str(qfile),
                "--x", "0,0,0", "--fix", "1=0.25", "--weight", "2=4",
            ],
        )
        doc = json.loads(out)
        want = cf_query(
            model,
            CfQuery(
                x=[0.0, 0.25, 0.0],
                target=CfTarget.score_interval(-1.0, 1.0),
                fixed_dims=(1,),
                weights=[1.0, 1.0, 4.0],
            ),
        )
        if want is None:
            assert code == 2
        else:
            assert code == 0
            assert doc["point"] == [float(v) for v in want.point]
            assert doc["sq_dist"] == want.sq_dist

    def test_epsilon_on_logistic_is_a_threshold_target(self, logit_model_path, capsys):
        path, model = logit_model_path
        code, out, _ = run(
            capsys, ["cf", path, "--x", "0,0", "--epsilon", "0.9", "--side", "ge"]
        )
        doc = json.loads(out)
        want = cf_query(
            model,
            CfQuery(x=[0.0, 0.0], target=CfTarget.probability_threshold(0.9, "ge")),
        )
        if want is None:
            assert code == 2
        else:
            assert code == 0
            assert doc["sq_dist"] == want.sq_dist

    def test_epsilon_on_regression_needs_a_radius(self, reg_model_path, capsys):
        path, model = reg_model_path
        code, _, err = run(capsys, ["cf", path, "--x", "0,0,0", "--epsilon", "0.5"])
        assert code == 1
        assert "target" in err
        code, out, _ = run(
            capsys,
            ["cf", path, "--x", "0,0,0", "--epsilon", "0.5", "--radius", "4.0"],
        )
        assert code == 0
        doc = json.loads(out)
        want = cf_set(model, CfQuery(x=[0.0, 0.0, 0.0], epsilon_pred=0.5, radius=4.0))
        assert doc["count"] == len(want)

    def test_radius_switches_to_set_output(self, reg_model_path, capsys):
        path, model = reg_model_path
        v = float(model.predict(np.zeros(3)).output[0])
        code, out, _ = run(
            capsys,
            [
                "cf", path, "--x", "0,0,0",
                f"--target-interval={v - 5}:{v + 5}", "--radius", "2.0",
            ],
        )
        assert code == 0
        doc = json.loads(out)
        want = cf_set(
            model,
            CfQuery(
                x=[0.0, 0.0, 0.0],
                target=CfTarget.score_interval(v - 5, v + 5),
                radius=2.0,
            ),
        )
        assert doc["status"] == "ok"
        assert doc["count"] == len(want) > 0
        assert doc["items"][0]["sq_dist"] == 0.0

    def test_conflicting_target_flags_exit_1(self, logit_model_path, capsys):
        path, _ = logit_model_path
        code, _, err = run(
            capsys,
            ["cf", path, "--x", "0,0", "--target-class", "1", "--epsilon", "0.5"],
        )
        assert code == 1
        assert "choose one" in err

    def test_bad_fix_and_weight_args(self, reg_model_path, capsys):
        path, _ = reg_model_path
        code, _, err = run(
            capsys,
            ["cf", path, "--x", "0,0,0", "--target-interval", "0:1", "--fix", "a=b"],
        )
        assert code == 1
        assert "bad --fix" in err
        code, _, err = run(
            capsys,
            ["cf", path, "--x", "0,0,0", "--target-interval", "0:1", "--fix", "7=1"],
        )
        assert code == 1
        assert "out of range" in err

    def test_bad_interval_flag(self, reg_model_path, capsys):
        path, _ = reg_model_path
        code, _, err = run(
            capsys, ["cf", path, "--x", "0,0,0", "--target-interval", "12"]
        )
        assert code == 1
        assert "bad interval" in err

    def test_x_or_query_required(self, reg_model_path, capsys):
        path, _ = reg_model_path
        code, _, err = run(capsys, ["cf", path, "--target-interval", "0:1"])
        assert code == 1
        assert "--x or --query" in err


class TestValidate:
    def test_clean_model_exits_0(self, reg_model_path, capsys):
        path, _ = reg_model_path
        code, out, _ = run(capsys, ["validate", path, "--samples", "200"])
        assert code == 0
        doc = json.loads(out)
        assert doc == {"checked": 200, "violations": []}

    def test_with_regions(self, reg_model_path, capsys):
        path, _ = reg_model_path
        code, out, _ = run(
            capsys, ["validate", path, "--samples", "100", "--with-regions"]
        )
        assert code == 0
        assert json.loads(out)["violations"] == []

    def test_violating_model_exits_1(self, tmp_path, capsys):
        bare = build_model(
            lows=[[0.0, 0.0], [1.0, 1.0]],
            highs=[[2.0, 2.0], [3.0, 3.0]],
            scores=[[-1.0], [1.0]],
            tree_ids=[0, 1],
        )
        path = tmp_path / "bare.json"
        bare.save(str(path))
        code, out, _ = run(capsys, ["validate", str(path), "--samples", "50"])
        assert code == 1
        assert json.loads(out)["violations"]
