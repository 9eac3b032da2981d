"""Acceptance gate: one test per release criterion, with runtime budgets.

Each test asserts the criterion's frozen expected values at its stated
tolerance and fails honestly when they do not hold.  The terminal
summary hook in conftest prints one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import disc
from nodulemorph.cli import main as cli_main
from nodulemorph.config import RunConfig
from nodulemorph.crossval import feature_matrix, run_cv, stratified_kfold
from nodulemorph.forest import ForestConfig, RandomForest
from nodulemorph.maskio import BinaryMask, load_catalog
from nodulemorph.metrics import class_metrics, dice_iou, f1_score
from nodulemorph.mlp import Mlp, MlpConfig
from nodulemorph.morphology import extract_features, hu_moments, largest_component, moments
from nodulemorph.preprocess import smote_balance, smote_sample
from test_morphology import naive_moments
from test_preprocess import segment_distance

README = Path(__file__).resolve().parent.parent / "README.md"


def elapsed(budget: float):
    """Context manager asserting the body ran within `budget` seconds."""

    class Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, *exc):
            self.seconds = time.perf_counter() - self.t0
            if exc == (None, None, None):
                assert self.seconds < budget, f"took {self.seconds:.3f}s, budget {budget}s"
            return False

    return Timer()


def blob_data(n_per_class: int, gap: float, seed: int, d: int = 15):
    rng = np.random.default_rng(seed)
    x = np.vstack(
        [rng.normal(0.0, 1.0, (n_per_class, d)), rng.normal(gap, 1.0, (n_per_class, d))]
    )
    y = np.array([0] * n_per_class + [1] * n_per_class)
    perm = rng.permutation(2 * n_per_class)
    return x[perm], y[perm]


def test_criterion_1_classification_metrics():
    m = class_metrics(tp=237, fn=51, fp=25, tn=36)
    assert m.accuracy == pytest.approx(0.7822, abs=0.0001)
    assert m.recall == pytest.approx(0.8229, abs=0.0001)
    assert f1_score(0.8843, 0.8229) == pytest.approx(0.8522, abs=0.0005)
    # trivial arithmetic must be instantaneous: best of five calls under 1 ms
    best = min(
        (lambda t0: (class_metrics(tp=237, fn=51, fp=25, tn=36), time.perf_counter() - t0))(
            time.perf_counter()
        )[1]
        for _ in range(5)
    )
    assert best < 0.001


def test_criterion_2_stratified_folds_and_pooled_accuracy():
    with elapsed(1.0):
        y = np.array([0] * 61 + [1] * 288)
        fa = stratified_kfold(y, k=5, seed=42)
        assert sorted(fa.fold_sizes()) == [69, 70, 70, 70, 70]
        benign = sorted(int(((fa.fold_of == f) & (y == 0)).sum()) for f in range(5))
        assert benign == [12, 12, 12, 12, 13]

        class ConstantPositive:
            def fit(self, x, yy):
                return self

            def predict(self, x):
                return np.ones(x.shape[0], dtype=np.int64)

        x = np.random.default_rng(0).normal(size=(349, 15))
        report = run_cv(x, y, classifier="constant", config=RunConfig(seed=42),
                        factory=lambda cfg, seed: ConstantPositive())
        assert report.pooled.accuracy == pytest.approx(288 / 349, abs=1e-4)


def test_criterion_3_shape_features_and_exact_moments():
    with elapsed(1.0):
        fv_disc = extract_features(BinaryMask(disc(50)))
        assert fv_disc.eccentricity < 0.05
        assert 0.85 <= fv_disc.form_factor <= 1.05
        assert fv_disc.solidity >= 0.98

        rect = np.zeros((7, 11), dtype=bool)
        rect[2:5, 2:9] = True
        fv_rect = extract_features(BinaryMask(rect))
        assert fv_rect.aspect_ratio == pytest.approx(2.3333, abs=1e-4)
        assert fv_rect.aspect_ratio == pytest.approx(7 / 3, abs=1e-6)
        assert fv_rect.eccentricity == pytest.approx(0.90351, abs=1e-5)
        assert fv_rect.hu1 == pytest.approx(0.230158, abs=1e-6)

        line = np.zeros((5, 104), dtype=bool)
        line[2, 2:102] = True
        assert extract_features(BinaryMask(line)).eccentricity == pytest.approx(0.99995, abs=1e-5)

        for shape in (rect, disc(11)):
            comp = largest_component(BinaryMask(shape))
            mset = moments(comp)
            raw, central, normalized = naive_moments(comp.pixels)
            assert mset.raw == raw
            assert mset.central == central
            assert mset.normalized == normalized


def test_criterion_4_hu_invariance_and_drift():
    with elapsed(2.0):
        g = np.zeros((9, 11), dtype=bool)
        g[2:7, 3:9] = True
        g[3, 2] = g[6, 9] = True  # break symmetry
        base = hu_moments(moments(largest_component(BinaryMask(g))))

        shifted = np.zeros((30, 33), dtype=bool)
        shifted[12 : 12 + g.shape[0], 9 : 9 + g.shape[1]] = g
        assert hu_moments(moments(largest_component(BinaryMask(shifted)))) == base

        for turns in (1, 2, 3):
            rotated = hu_moments(moments(largest_component(BinaryMask(np.rot90(g, turns)))))
            for a, b in zip(base, rotated):
                if b != 0.0:
                    assert abs(a - b) / abs(b) <= 1e-9
                else:
                    assert a == 0.0

        small = hu_moments(moments(largest_component(BinaryMask(disc(25)))))
        big = hu_moments(moments(largest_component(BinaryMask(disc(100)))))
        assert abs(small[0] - big[0]) / abs(big[0]) <= 0.02


def test_criterion_5_minority_oversampling():
    with elapsed(1.0):
        rng = np.random.default_rng(31)
        x = np.vstack([rng.normal(0, 1, (61, 15)), rng.normal(3, 1, (288, 15))])
        y = np.array([0] * 61 + [1] * 288)
        xb, yb = smote_balance(x, y, seed=5)
        assert np.bincount(yb).tolist() == [288, 288]
        assert xb.shape[0] == 576

        x_min = rng.normal(size=(12, 4))
        synth = smote_sample(x_min, 25, k_neighbors=5, seed=6)
        for s in synth:
            best = min(
                segment_distance(s, x_min[i], x_min[j])
                for i in range(12)
                for j in range(12)
                if i != j
            )
            assert best < 1e-9

        degenerate = smote_sample(np.tile([2.0, 7.0], (5, 1)), 10, seed=7)
        assert np.allclose(degenerate, [2.0, 7.0])


def test_criterion_6_forest_and_mlp_training():
    with elapsed(30.0):
        x, y = blob_data(150, gap=4.0, seed=60)
        x_train, y_train = x[:200], y[:200]
        x_test, y_test = x[200:], y[200:]

        forest = RandomForest(ForestConfig(n_trees=100), seed=8).fit(x_train, y_train)
        assert (forest.predict(x_test) == y_test).mean() >= 0.99

        net = Mlp(MlpConfig(), seed=9).fit(x_train, y_train)
        assert (net.predict(x_test) == y_test).mean() >= 0.99

        probe = Mlp(MlpConfig(hidden=6), seed=1)
        params = probe._init_params(5)
        rng = np.random.default_rng(61)
        gx = rng.normal(size=(10, 5))
        gy = rng.integers(0, 2, size=10).astype(float)
        _, analytic = probe.loss_and_grads(gx, gy, params)
        eps = 1e-5
        for key, arr in params.items():
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                old = arr[i]
                arr[i] = old + eps
                up, _ = probe.loss_and_grads(gx, gy, params)
                arr[i] = old - eps
                down, _ = probe.loss_and_grads(gx, gy, params)
                arr[i] = old
                numeric = (up - down) / (2 * eps)
                denom = max(abs(numeric), abs(analytic[key][i]), 1e-8)
                assert abs(numeric - analytic[key][i]) / denom < 1e-4

        jsons = [
            RandomForest(ForestConfig(n_trees=30, n_threads=t), seed=4).fit(x_train, y_train).to_json()
            for t in (1, 2, 8)
        ]
        assert jsons[0] == jsons[1] == jsons[2]


def test_criterion_7_dice_and_iou():
    with elapsed(1.0):
        a = disc(6)
        assert dice_iou(a, a.copy()).dice == 1.0
        assert dice_iou(a, a.copy()).iou == 1.0

        top = np.zeros((8, 8), dtype=bool)
        bottom = np.zeros((8, 8), dtype=bool)
        top[:3] = True
        bottom[5:] = True
        assert dice_iou(top, bottom).dice == 0.0
        assert dice_iou(top, bottom).iou == 0.0

        first = np.zeros((10, 10), dtype=bool)
        second = np.zeros((10, 10), dtype=bool)
        first[0:4] = True
        second[2:6] = True
        half = dice_iou(first, second)
        assert half.dice == 0.5
        assert half.iou == pytest.approx(1 / 3, abs=1e-15)

        rng = np.random.default_rng(70)
        for _ in range(100):
            p = rng.random((15, 15)) < 0.5
            q = rng.random((15, 15)) < 0.5
            m = dice_iou(p, q)
            if not m.vacuous:
                assert abs(m.dice - 2.0 * m.iou / (1.0 + m.iou)) < 1e-12


def test_criterion_8_synthetic_cohort_end_to_end(tmp_path):
    with elapsed(60.0):
        runner = CliRunner()
        made = runner.invoke(
            cli_main,
            ["cohort", "make", "--out-dir", str(tmp_path / "cohort"), "--seed", "42"],
        )
        assert made.exit_code == 0, made.output
        ran = runner.invoke(
            cli_main,
            [
                "cv", "run",
                "--mask-dir", str(tmp_path / "cohort" / "masks"),
                "--labels", str(tmp_path / "cohort" / "labels.csv"),
                "--classifier", "both",
                "--out-dir", str(tmp_path / "reports"),
                "--seed", "42",
            ],
        )
        assert ran.exit_code == 0, ran.output
        payload = json.loads((tmp_path / "reports" / "report_rf.json").read_text(encoding="utf-8"))
        assert payload["pooled"]["metrics"]["f1"] >= 0.90
        assert (tmp_path / "reports" / "report_mlp.json").is_file()


def test_criterion_9_clinical_cohort_documented_optional():
    # The absolute clinical-cohort numbers need the original ultrasound
    # dataset, which does not ship here; the limitation must be documented
    # and the check must stay optional and environment-gated.
    text = README.read_text(encoding="utf-8")
    assert "NODULEMORPH_DDTI_DIR" in text
    assert "cannot be reproduced" in text.lower() or "not reproducible" in text.lower()

    data_dir = os.environ.get("NODULEMORPH_DDTI_DIR")
    if not data_dir:
        return  # documented; nothing further to check without the data
    root = Path(data_dir)
    catalog = load_catalog(None, root / "masks", labels_csv=root / "labels.csv")
    x, y, _, _ = feature_matrix(catalog)
    report = run_cv(x, y, classifier="rf", config=RunConfig(seed=42))
    assert 0.75 <= report.pooled.f1 <= 0.90
