import json

import pytest

from baitscore import cli
from baitscore.data import parse_instances, parse_truth
from baitscore.media import generate_synthetic_vectors, write_image_vectors, write_object_tags
from helpers import make_dataset, separable_dataset, write_corpus
from test_media import tag


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One trained tiny model plus corpora, shared across the module."""
    root = tmp_path_factory.mktemp("cli")
    labelled = separable_dataset(n=16, name="labelled")
    inst, truth = write_corpus(labelled, root, "labelled")
    unlabelled = make_dataset(
        [(f"u{i}", f"{'revealed' if i % 2 else 'plain'} story filler{i} today", None)
         for i in range(6)],
        name="pool",
    )
    pool_inst, _ = write_corpus(unlabelled, root, "pool")
    prefix = root / "model"
    rc = cli.main([
        "train",
        "--instances", str(inst),
        "--truth", str(truth),
        "--arch", "cnn",
        "--epochs", "2",
        "--seq-length", "8",
        "--vocab-size", "50",
        "--embed-dim", "8",
        "--dense-units", "4",
        "--batch-size", "8",
        "--val-fraction", "0",
        "--out", str(prefix),
        "--quiet",
    ])
    assert rc == 0
    return {
        "root": root,
        "instances": inst,
        "truth": truth,
        "pool": pool_inst,
        "prefix": prefix,
        "n_posts": len(labelled),
    }


TRAIN_SPEED_FLAGS = [
    "--arch", "cnn", "--seq-length", "8", "--vocab-size", "50",
    "--embed-dim", "8", "--dense-units", "4", "--batch-size", "8",
    "--val-fraction", "0",
]


class TestExitCodes:
    def test_unknown_flag_exits_2(self, workspace):
        with pytest.raises(SystemExit) as exc:
            cli.main(["ingest", "--no-such-flag"])
        assert exc.value.code == 2

    def test_bad_epoch_count_exits_2(self, workspace):
        with pytest.raises(SystemExit) as exc:
            cli.main(["train", "--epochs", "0"])
        assert exc.value.code == 2

    def test_missing_required_flag_exits_2(self, capsys):
        rc = cli.main(["ingest", "--quiet"])
        assert rc == 2
        assert "instances" in capsys.readouterr().err

    def test_nonexistent_file_exits_1(self, tmp_path, capsys):
        rc = cli.main(["ingest", "--instances", str(tmp_path / "nope.jsonl")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_malformed_corpus_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{broken\n")
        rc = cli.main(["ingest", "--instances", str(bad), "--quiet"])
        assert rc == 1
        assert "line 1" in capsys.readouterr().err


class TestIngest:
    def test_reports_counts_and_ratio(self, workspace, capsys):
        rc = cli.main([
            "ingest", "--instances", str(workspace["instances"]),
            "--truth", str(workspace["truth"]), "--name", "demo", "--quiet",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "name: demo" in out
        assert "posts: 16" in out
        assert "clickbait: 8" in out
        assert "no-clickbait: 8" in out
        assert "ratio: 1:1.00" in out

    def test_unlabelled_noted(self, workspace, capsys):
        rc = cli.main(["ingest", "--instances", str(workspace["pool"]), "--quiet"])
        assert rc == 0
        assert "labelled: no" in capsys.readouterr().out

    def test_banner_prints_unless_quiet(self, workspace, capsys):
        cli.main(["ingest", "--instances", str(workspace["pool"])])
        out = capsys.readouterr().out
        assert out.startswith("spec: {")
        assert "seed: 7" in out
        cli.main(["ingest", "--instances", str(workspace["pool"]), "--quiet"])
        assert "spec:" not in capsys.readouterr().out

    def test_normalized_copies_round_trip(self, workspace, tmp_path, capsys):
        out_inst = tmp_path / "norm-instances.jsonl"
        out_truth = tmp_path / "norm-truth.jsonl"
        rc = cli.main([
            "ingest", "--instances", str(workspace["instances"]),
            "--truth", str(workspace["truth"]),
            "--out-instances", str(out_inst), "--out-truth", str(out_truth),
            "--quiet",
        ])
        assert rc == 0
        with open(out_inst) as f:
            again = parse_instances(f)
        assert len(again) == workspace["n_posts"]
        with open(out_truth) as f:
            truths = parse_truth(f)
        assert len(truths) == workspace["n_posts"]

    def test_thirds_scale_opt_in(self, tmp_path, capsys):
        third = 1.0 / 3.0
        inst = tmp_path / "t-instances.jsonl"
        truth = tmp_path / "t-truth.jsonl"
        inst.write_text('{"id":"a","postText":["x"]}\n')
        truth.write_text(json.dumps(
            {"id": "a", "truthJudgments": [third] * 5, "truthMean": third}
        ) + "\n")
        default_rc = cli.main([
            "ingest", "--instances", str(inst), "--truth", str(truth), "--quiet",
        ])
        assert default_rc == 1  # not on the default judgment scale
        capsys.readouterr()
        rc = cli.main([
            "ingest", "--instances", str(inst), "--truth", str(truth),
            "--judgment-scale", "thirds", "--quiet",
        ])
        assert rc == 0


class TestConfigResolution:
    def test_flags_beat_config_beat_defaults(self, workspace, tmp_path, capsys):
        config = tmp_path / "run.conf"
        config.write_text("epochs = 3  # comment\nval-fraction = 0\n")
        base = [
            "train", "--config", str(config),
            "--instances", str(workspace["instances"]),
            "--truth", str(workspace["truth"]),
            *TRAIN_SPEED_FLAGS,
            "--out", str(tmp_path / "m1"), "--quiet",
        ]
        assert cli.main(base) == 0
        from_config = capsys.readouterr().out
        assert from_config.count("epoch ") == 3

        assert cli.main(base + ["--epochs", "2"]) == 0
        overridden = capsys.readouterr().out
        assert overridden.count("epoch ") == 2

    def test_banner_shows_resolved_values(self, workspace, tmp_path, capsys):
        config = tmp_path / "run.conf"
        config.write_text("epochs = 3\nval-fraction = 0\n")
        rc = cli.main([
            "train", "--config", str(config),
            "--instances", str(workspace["instances"]),
            "--truth", str(workspace["truth"]),
            *TRAIN_SPEED_FLAGS,
            "--epochs", "2",
            "--out", str(tmp_path / "m2"),
        ])
        assert rc == 0
        banner_line = [
            line for line in capsys.readouterr().out.splitlines()
            if line.startswith("spec: ")
        ][0]
        resolved = json.loads(banner_line[len("spec: "):])
        assert resolved["epochs"] == 2  # the flag beat the config file
        assert resolved["command"] == "train"

    def test_duplicate_config_key_exits_2(self, tmp_path, capsys):
        config = tmp_path / "dup.conf"
        config.write_text("epochs = 1\nepochs = 2\n")
        rc = cli.main(["ingest", "--config", str(config), "--instances", "x"])
        assert rc == 2
        assert "duplicate" in capsys.readouterr().err

    def test_bad_config_value_exits_2(self, workspace, tmp_path, capsys):
        config = tmp_path / "bad.conf"
        config.write_text("epochs = many\n")
        rc = cli.main([
            "train", "--config", str(config),
            "--instances", str(workspace["instances"]),
            "--truth", str(workspace["truth"]),
            "--out", str(tmp_path / "m"), "--quiet",
        ])
        assert rc == 2
        assert "epochs" in capsys.readouterr().err

    def test_common_flags_accepted_before_subcommand(self, workspace, capsys):
        rc = cli.main(["--quiet", "ingest", "--instances", str(workspace["pool"])])
        assert rc == 0
        assert "spec:" not in capsys.readouterr().out


class TestTrainPredictEvaluate:
    def test_train_writes_model_trio(self, workspace, capsys):
        prefix = workspace["prefix"]
        for suffix in (".ckpt", ".vocab.tsv", ".json"):
            assert prefix.with_suffix(suffix).exists()
        meta = json.loads(prefix.with_suffix(".json").read_text())
        assert meta["config"]["branch"] == "cnn"
        assert len(meta["history"]) == 2

    def test_train_prints_progress(self, workspace, tmp_path, capsys):
        rc = cli.main([
            "train", "--instances", str(workspace["instances"]),
            "--truth", str(workspace["truth"]),
            *TRAIN_SPEED_FLAGS, "--epochs", "1",
            "--out", str(tmp_path / "m"), "--quiet",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "epoch 1: train_mse=" in out
        assert f"model: {tmp_path / 'm'}" in out

    def test_predict_writes_scores_for_every_post(self, workspace, tmp_path, capsys):
        out = tmp_path / "preds.jsonl"
        rc = cli.main([
            "predict", "--model", str(workspace["prefix"]),
            "--instances", str(workspace["instances"]),
            "--out", str(out), "--quiet",
        ])
        assert rc == 0
        assert f"predictions: {out} (16 posts)" in capsys.readouterr().out
        lines = out.read_text().splitlines()
        assert len(lines) == 16
        record = json.loads(lines[0])
        assert set(record) == {"id", "clickbaitScore"}
        assert 0.0 <= record["clickbaitScore"] <= 1.0

    def test_predict_reruns_are_byte_identical(self, workspace, tmp_path):
        paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
        for path in paths:
            rc = cli.main([
                "predict", "--model", str(workspace["prefix"]),
                "--instances", str(workspace["instances"]),
                "--out", str(path), "--quiet",
            ])
            assert rc == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_evaluate_reports_json_then_table(self, workspace, tmp_path, capsys):
        pred = tmp_path / "preds.jsonl"
        cli.main([
            "predict", "--model", str(workspace["prefix"]),
            "--instances", str(workspace["instances"]),
            "--out", str(pred), "--quiet",
        ])
        capsys.readouterr()
        rc = cli.main([
            "evaluate", "--pred", str(pred), "--truth", str(workspace["truth"]),
        ])
        assert rc == 0
        out_lines = [l for l in capsys.readouterr().out.splitlines() if l]
        json_lines = [l for l in out_lines if l.startswith("{")]
        assert len(json_lines) == 1
        report = json.loads(json_lines[0])
        for key in ("mse", "rmse", "mae", "r2", "precision", "recall", "f1",
                    "accuracy", "n", "threshold", "truth_ratio"):
            assert key in report
        assert report["n"] == 16
        assert any(l.startswith("mse") for l in out_lines)  # the table view

    def test_evaluate_quiet_is_json_only(self, workspace, tmp_path, capsys):
        pred = tmp_path / "preds.jsonl"
        cli.main([
            "predict", "--model", str(workspace["prefix"]),
            "--instances", str(workspace["instances"]),
            "--out", str(pred), "--quiet",
        ])
        capsys.readouterr()
        rc = cli.main([
            "evaluate", "--pred", str(pred), "--truth", str(workspace["truth"]),
            "--quiet",
        ])
        assert rc == 0
        out_lines = [l for l in capsys.readouterr().out.splitlines() if l]
        assert len(out_lines) == 1
        json.loads(out_lines[0])

    def test_evaluate_id_mismatch_exits_1(self, workspace, tmp_path, capsys):
        pred = tmp_path / "partial.jsonl"
        pred.write_text('{"id":"p0","clickbaitScore":0.5}\n')
        rc = cli.main([
            "evaluate", "--pred", str(pred), "--truth", str(workspace["truth"]),
            "--quiet",
        ])
        assert rc == 1
        assert "lack predictions" in capsys.readouterr().err


class TestSelftrain:
    def test_merge_report_and_outputs(self, workspace, tmp_path, capsys):
        out_inst = tmp_path / "merged-instances.jsonl"
        out_truth = tmp_path / "merged-truth.jsonl"
        report_path = tmp_path / "report.json"
        rc = cli.main([
            "selftrain", "--model", str(workspace["prefix"]),
            "--unlabelled", str(workspace["pool"]),
            "--labelled-instances", str(workspace["instances"]),
            "--labelled-truth", str(workspace["truth"]),
            "--out-instances", str(out_inst), "--out-truth", str(out_truth),
            "--report", str(report_path), "--quiet",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "labelled_posts: 16" in out
        assert "unlabelled_posts: 6" in out
        assert "combined_posts: 22" in out
        assert "noisy_ratio:" in out and "combined_ratio:" in out

        report = json.loads(report_path.read_text())
        assert report["combined_posts"] == 22

        with open(out_inst) as f:
            merged = parse_instances(f)
        assert len(merged) == 22
        with open(out_truth) as f:
            truths = parse_truth(f)
        synthetic = [t for t in truths.values() if t.synthetic]
        assert len(synthetic) == 6
        assert all(t.judgments == () for t in synthetic)

    def test_pseudo_labels_without_merge(self, workspace, tmp_path, capsys):
        rc = cli.main([
            "selftrain", "--model", str(workspace["prefix"]),
            "--unlabelled", str(workspace["pool"]), "--quiet",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "unlabelled_posts: 6" in out
        assert "combined_posts" not in out

    def test_half_labelled_pair_exits_2(self, workspace, capsys):
        rc = cli.main([
            "selftrain", "--model", str(workspace["prefix"]),
            "--unlabelled", str(workspace["pool"]),
            "--labelled-instances", str(workspace["instances"]), "--quiet",
        ])
        assert rc == 2
        assert "go together" in capsys.readouterr().err


class TestBaselineCommand:
    def test_fit_save_evaluate(self, workspace, tmp_path, capsys):
        model_out = tmp_path / "baseline.json"
        pred_out = tmp_path / "baseline-preds.jsonl"
        rc = cli.main([
            "baseline", "--instances", str(workspace["instances"]),
            "--truth", str(workspace["truth"]),
            "--estimators", "10",
            "--out", str(model_out),
            "--test-instances", str(workspace["instances"]),
            "--test-truth", str(workspace["truth"]),
            "--pred-out", str(pred_out), "--quiet",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "stumps:" in out
        assert f"model: {model_out}" in out
        json_lines = [l for l in out.splitlines() if l.startswith("{")]
        report = json.loads(json_lines[0])
        assert report["n"] == 16
        assert len(pred_out.read_text().splitlines()) == 16

    def test_saved_model_reusable_without_fit(self, workspace, tmp_path, capsys):
        model_out = tmp_path / "baseline.json"
        cli.main([
            "baseline", "--instances", str(workspace["instances"]),
            "--truth", str(workspace["truth"]), "--estimators", "5",
            "--out", str(model_out), "--quiet",
        ])
        capsys.readouterr()
        pred_out = tmp_path / "reuse-preds.jsonl"
        rc = cli.main([
            "baseline", "--model", str(model_out),
            "--test-instances", str(workspace["instances"]),
            "--test-truth", str(workspace["truth"]),
            "--pred-out", str(pred_out), "--quiet",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "stumps:" not in out  # nothing was fitted
        assert pred_out.exists()


class TestAnalyzeMedia:
    @pytest.fixture()
    def media_files(self, workspace, tmp_path):
        ids = [f"p{i}" for i in range(16)]
        labels = ["person", "car", "pizza", "dog"]
        tags = [tag(post_id, (labels[i % 4], 0.9)) for i, post_id in enumerate(ids)]
        tags_path = tmp_path / "tags.jsonl"
        write_object_tags(tags, tags_path)
        vec_path = tmp_path / "vectors.jsonl"
        write_image_vectors(generate_synthetic_vectors(ids[:3], seed=0), vec_path)
        return {"tags": tags_path, "vectors": vec_path}

    def test_validate_only(self, workspace, media_files, capsys):
        rc = cli.main([
            "analyze-media", "--tags", str(media_files["tags"]),
            "--vectors", str(media_files["vectors"]),
            "--validate-only", "--quiet",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "image vectors: 3 (2048-dim)" in out
        assert "object tags: 16 images, 16 detections" in out
        assert "validation: ok" in out

    def test_full_run_writes_tables_and_figures(self, workspace, media_files,
                                                tmp_path, capsys):
        out_dir = tmp_path / "report"
        rc = cli.main([
            "analyze-media", "--tags", str(media_files["tags"]),
            "--truth", str(workspace["truth"]),
            "--bins", "4", "--out-dir", str(out_dir), "--quiet",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        for name in ("proportions.csv", "proportions.png", "trend.csv", "trend.png"):
            assert (out_dir / name).exists()
            assert f"wrote: {out_dir / name}" in out
        assert (out_dir / "proportions.png").read_bytes()[:4] == b"\x89PNG"
        header = (out_dir / "proportions.csv").read_text().splitlines()[0]
        assert header == "class,category,proportion"
        # the separable corpus only has scores 0.0 and 1.0: middle bins empty
        assert "empty bins omitted" in out

    def test_scores_can_come_from_predictions(self, workspace, media_files,
                                              tmp_path, capsys):
        pred = tmp_path / "preds.jsonl"
        cli.main([
            "predict", "--model", str(workspace["prefix"]),
            "--instances", str(workspace["instances"]),
            "--out", str(pred), "--quiet",
        ])
        capsys.readouterr()
        out_dir = tmp_path / "report2"
        rc = cli.main([
            "analyze-media", "--tags", str(media_files["tags"]),
            "--pred", str(pred), "--bins", "2",
            "--out-dir", str(out_dir), "--quiet",
        ])
        assert rc == 0
        assert (out_dir / "trend.csv").exists()

    def test_no_inputs_exits_2(self, capsys):
        rc = cli.main(["analyze-media", "--quiet"])
        assert rc == 2
        assert "nothing to do" in capsys.readouterr().err

    def test_tags_without_scores_exits_2(self, media_files, capsys):
        rc = cli.main([
            "analyze-media", "--tags", str(media_files["tags"]), "--quiet",
        ])
        assert rc == 2
        assert "--truth or --pred" in capsys.readouterr().err
