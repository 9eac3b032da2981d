from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from nodulemorph.cli import main
from nodulemorph.maskio import BinaryMask, save_mask
from nodulemorph.synthetic import write_cohort


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def cohort_dir(tmp_path):
    info = write_cohort(tmp_path / "cohort", seed=42, n_per_class=8, size=96)
    return tmp_path / "cohort", info


def test_top_level_help_lists_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for name in ("features", "cv", "segeval", "roi", "report", "cohort"):
        assert name in result.output


def test_version_flag(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "nodulemorph" in result.output


def test_defaults_visible_in_help(runner):
    pad = " ".join(runner.invoke(main, ["roi", "export", "--help"]).output.split())
    assert "[default: 10]" in pad
    assert "[default: 224]" in pad
    cv_help = " ".join(runner.invoke(main, ["cv", "run", "--help"]).output.split())
    assert "[default: 5]" in cv_help
    assert "[default: 42]" in cv_help
    assert "NODULEMORPH_THREADS" in cv_help


class TestFeaturesExtract:
    def test_happy_path(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        out = tmp_path / "features.csv"
        result = runner.invoke(
            main, ["features", "extract", "--mask-dir", info["mask_dir"], "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("sample_id,area,perimeter,")
        assert len(lines) == 1 + 16

    def test_empty_mask_skipped_exit_2(self, runner, tmp_path):
        masks = tmp_path / "masks"
        masks.mkdir()
        solid = np.zeros((9, 9), dtype=bool)
        solid[3:6, 3:6] = True
        save_mask(BinaryMask(solid), masks / "ok.png")
        save_mask(BinaryMask(np.zeros((9, 9), dtype=bool)), masks / "void.png")
        out = tmp_path / "f.csv"
        result = runner.invoke(main, ["features", "extract", "--mask-dir", str(masks), "--out", str(out)])
        assert result.exit_code == 2
        assert "void" in result.output
        assert len(out.read_text(encoding="utf-8").splitlines()) == 2

    def test_no_masks_exit_2(self, runner, tmp_path):
        masks = tmp_path / "none"
        masks.mkdir()
        result = runner.invoke(main, ["features", "extract", "--mask-dir", str(masks)])
        assert result.exit_code == 2

    def test_missing_dir_exit_3(self, runner, tmp_path):
        result = runner.invoke(main, ["features", "extract", "--mask-dir", str(tmp_path / "nope")])
        assert result.exit_code == 3


class TestCvRun:
    def test_both_classifiers_write_reports(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        out_dir = tmp_path / "reports"
        cfg = tmp_path / "fast.cfg"
        cfg.write_text("mlp.epochs = 25\nforest.n_trees = 15\n", encoding="utf-8")
        result = runner.invoke(
            main,
            [
                "cv", "run",
                "--mask-dir", info["mask_dir"],
                "--labels", info["labels_csv"],
                "--classifier", "both",
                "--out-dir", str(out_dir),
                "--config", str(cfg),
                "--seed", "7",
            ],
        )
        assert result.exit_code == 0, result.output
        for name in ("rf", "mlp"):
            payload = json.loads((out_dir / f"report_{name}.json").read_text(encoding="utf-8"))
            assert payload["seed"] == 7
            assert payload["config"]["forest"]["n_trees"] == 15
            assert (out_dir / f"report_{name}.csv").is_file()
        assert "rf: pooled" in result.output
        assert "mlp: pooled" in result.output

    def test_no_smote_flag_lands_in_config(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        out_dir = tmp_path / "r2"
        result = runner.invoke(
            main,
            ["cv", "run", "--mask-dir", info["mask_dir"], "--labels", info["labels_csv"],
             "--out-dir", str(out_dir), "--trees", "10", "--no-smote"],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads((out_dir / "report_rf.json").read_text(encoding="utf-8"))
        assert payload["config"]["smote"]["enabled"] is False

    def test_bad_labels_path_exit_3(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        result = runner.invoke(
            main,
            ["cv", "run", "--mask-dir", info["mask_dir"], "--labels", str(tmp_path / "no.csv")],
        )
        assert result.exit_code == 3

    def test_unknown_config_key_exit_3(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("forest.depth = 3\n", encoding="utf-8")
        result = runner.invoke(
            main,
            ["cv", "run", "--mask-dir", info["mask_dir"], "--labels", info["labels_csv"],
             "--config", str(cfg)],
        )
        assert result.exit_code == 3
        assert "unknown key" in result.output

    def test_too_few_samples_for_folds_exit_3(self, runner, tmp_path):
        masks = tmp_path / "m"
        masks.mkdir()
        solid = np.zeros((9, 9), dtype=bool)
        solid[2:7, 2:7] = True
        for i in range(3):
            save_mask(BinaryMask(solid), masks / f"s{i}.png")
        (tmp_path / "l.csv").write_text(
            "sample_id,tirads\ns0,2\ns1,5\ns2,5\n", encoding="utf-8"
        )
        result = runner.invoke(
            main,
            ["cv", "run", "--mask-dir", str(masks), "--labels", str(tmp_path / "l.csv")],
        )
        assert result.exit_code == 3


class TestSegeval:
    def test_identical_dirs_perfect_scores(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        out = tmp_path / "seg.json"
        result = runner.invoke(
            main,
            ["segeval", "--pred-dir", info["mask_dir"], "--true-dir", info["mask_dir"],
             "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["mean_dice"] == 1.0
        assert payload["mean_iou"] == 1.0
        assert payload["n_pairs"] == 16

    def test_unmatched_stem_exit_2(self, runner, tmp_path):
        pred = tmp_path / "pred"
        true = tmp_path / "true"
        pred.mkdir()
        true.mkdir()
        g = np.zeros((6, 6), dtype=bool)
        g[2:4, 2:4] = True
        save_mask(BinaryMask(g), pred / "a.png")
        save_mask(BinaryMask(g), true / "a.png")
        save_mask(BinaryMask(g), pred / "extra.png")
        result = runner.invoke(
            main, ["segeval", "--pred-dir", str(pred), "--true-dir", str(true),
                   "--out", str(tmp_path / "s.json")]
        )
        assert result.exit_code == 2
        assert "extra" in result.output


class TestRoiExport:
    def test_exports_one_tensor_per_sample(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        out_dir = tmp_path / "tensors"
        result = runner.invoke(
            main,
            ["roi", "export", "--image-dir", info["image_dir"], "--mask-dir", info["mask_dir"],
             "--out-dir", str(out_dir), "--size", "32"],
        )
        assert result.exit_code == 0, result.output
        files = sorted(out_dir.glob("*.roi"))
        assert len(files) == 16
        header = json.loads(files[0].read_bytes().split(b"\n", 1)[0])
        assert header["shape"] == [3, 32, 32]

    def test_missing_image_skips_exit_2(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        # one extra mask with no matching image
        g = np.zeros((9, 9), dtype=bool)
        g[3:6, 3:6] = True
        save_mask(BinaryMask(g), Path(info["mask_dir"]) / "zz_orphan.png")
        out_dir = tmp_path / "tensors"
        result = runner.invoke(
            main,
            ["roi", "export", "--image-dir", info["image_dir"], "--mask-dir", info["mask_dir"],
             "--out-dir", str(out_dir), "--size", "16"],
        )
        assert result.exit_code == 2
        assert "zz_orphan" in result.output
        assert len(list(out_dir.glob("*.roi"))) == 16


class TestReportShow:
    def test_shows_pooled_summary(self, runner, cohort_dir, tmp_path):
        root, info = cohort_dir
        out_dir = tmp_path / "reports"
        runner.invoke(
            main,
            ["cv", "run", "--mask-dir", info["mask_dir"], "--labels", info["labels_csv"],
             "--out-dir", str(out_dir), "--trees", "10"],
        )
        result = runner.invoke(main, ["report", "show", str(out_dir / "report_rf.json")])
        assert result.exit_code == 0, result.output
        assert "pooled cm:" in result.output
        assert "fold_mean:" in result.output

    def test_missing_file_exit_3(self, runner, tmp_path):
        result = runner.invoke(main, ["report", "show", str(tmp_path / "gone.json")])
        assert result.exit_code == 3

    def test_malformed_file_exit_3(self, runner, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{\"run_id\": 1}", encoding="utf-8")
        result = runner.invoke(main, ["report", "show", str(p)])
        assert result.exit_code == 3


class TestCohortMake:
    def test_writes_and_is_deterministic(self, runner, tmp_path):
        args = ["--seed", "5", "--n-per-class", "4", "--size", "64"]
        r1 = runner.invoke(main, ["cohort", "make", "--out-dir", str(tmp_path / "a"), *args])
        r2 = runner.invoke(main, ["cohort", "make", "--out-dir", str(tmp_path / "b"), *args])
        assert r1.exit_code == 0 and r2.exit_code == 0
        a_labels = (tmp_path / "a" / "labels.csv").read_bytes()
        b_labels = (tmp_path / "b" / "labels.csv").read_bytes()
        assert a_labels == b_labels
        a_mask = (tmp_path / "a" / "masks" / "malig_000.png").read_bytes()
        b_mask = (tmp_path / "b" / "masks" / "malig_000.png").read_bytes()
        assert a_mask == b_mask
        assert len(list((tmp_path / "a" / "images").glob("*.png"))) == 8
