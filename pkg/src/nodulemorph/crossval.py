"""Stratified k-fold cross-validation with leakage-safe preprocessing.

Scaling and minority oversampling are fit inside each training fold; the
held-out fold is only transformed with the training fold's scaler.
Results are aggregated two ways: a pooled confusion matrix over all
held-out predictions, and the unweighted mean of per-fold metrics.
Reports carry no wall-clock state, so a rerun with the same inputs is
byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .config import RunConfig
from .errors import EmptyMaskError, FitError, StratificationError
from .forest import RandomForest
from .maskio import ClassLabel, DatasetCatalog
from .metrics import ClassMetrics, ConfusionMatrix, metrics_from_matrix
from .mlp import Mlp
from .morphology import FEATURE_NAMES, extract_features
from .preprocess import apply_scaler, fit_scaler, smote_balance
from .rng import substream, substream_seed

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


class Classifier(Protocol):
    def fit(self, x: np.ndarray, y: np.ndarray) -> "Classifier": ...

    def predict(self, x: np.ndarray) -> np.ndarray: ...


ClassifierFactory = Callable[[RunConfig, int], Classifier]


def _rf_factory(config: RunConfig, seed: int) -> Classifier:
    return RandomForest(config.forest, seed=seed)


def _mlp_factory(config: RunConfig, seed: int) -> Classifier:
    return Mlp(config.mlp, seed=seed)


CLASSIFIER_FACTORIES: dict[str, ClassifierFactory] = {"rf": _rf_factory, "mlp": _mlp_factory}


@dataclass(frozen=True)
class FoldAssignment:
    """Fold index for every sample; folds are 0..k-1."""

    fold_of: np.ndarray
    k: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def fold_sizes(self) -> list[int]:
        return [int((self.fold_of == f).sum()) for f in range(self.k)]


def stratified_kfold(labels: Sequence, k: int, seed: int) -> FoldAssignment:
    """Deal each class round-robin into k folds through one shared cursor.

    Classes are processed in sorted order, each shuffled with its own
    substream; the cursor keeps advancing across classes, so fold sizes
    differ by at most one both per class and in total.
    """
    labels_list = list(labels)
    n = len(labels_list)
    if k < 2:
        raise StratificationError(f"k must be >= 2, got {k}")
    if n == 0:
        raise StratificationError("no samples to split")
    try:
        classes = sorted(set(labels_list))
    except TypeError:
        classes = sorted(set(labels_list), key=repr)
    for cls in classes:
        count = sum(1 for lab in labels_list if lab == cls)
        if count < k:
            raise StratificationError(f"class {cls!r} has {count} samples, fewer than k={k}")

    fold_of = np.empty(n, dtype=np.int64)
    cursor = 0
    for position, cls in enumerate(classes):
        idx = np.array([i for i, lab in enumerate(labels_list) if lab == cls], dtype=np.int64)
        perm = substream(seed, "fold-split", position).permutation(idx.shape[0])
        shuffled = idx[perm]
        for offset, sample in enumerate(shuffled):
            fold_of[sample] = (cursor + offset) % k
        cursor = (cursor + idx.shape[0]) % k
    return FoldAssignment(fold_of=fold_of, k=k)


def labels_to_int(labels: Sequence) -> np.ndarray:
    """Map labels to 0 (benign) / 1 (malignant); 0/1 ints pass through."""
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        if isinstance(lab, ClassLabel):
            out[i] = 1 if lab is ClassLabel.MALIGNANT else 0
        elif lab in (0, 1):
            out[i] = int(lab)
        else:
            raise FitError(f"label {lab!r} is neither a class label nor 0/1")
    return out


def feature_matrix(catalog: DatasetCatalog) -> tuple[np.ndarray, np.ndarray, list[str], list[str]]:
    """Morphological features for every labeled catalog sample.

    Returns (x, y, sample_ids, skipped); samples whose masks have no
    foreground are skipped with a reason rather than failing the batch.
    """
    rows: list[np.ndarray] = []
    ys: list[int] = []
    ids: list[str] = []
    skipped = list(catalog.skipped)
    for sample in catalog.labeled:
        try:
            fv = extract_features(sample.mask)
        except EmptyMaskError:
            skipped.append(f"{sample.sample_id}: empty mask")
            continue
        rows.append(fv.as_array())
        ys.append(1 if sample.label is ClassLabel.MALIGNANT else 0)
        ids.append(sample.sample_id)
    if rows:
        x = np.vstack(rows)
    else:
        x = np.empty((0, len(FEATURE_NAMES)), dtype=np.float64)
    return x, np.array(ys, dtype=np.int64), ids, skipped


@dataclass(frozen=True)
class FoldResult:
    fold: int
    cm: ConfusionMatrix
    metrics: ClassMetrics
    train_size: int
    test_size: int
    resampled_train_size: int

    def as_dict(self) -> dict:
        return {
            "fold": self.fold,
            "cm": self.cm.as_dict(),
            "metrics": self.metrics.as_dict(),
            "train_size": self.train_size,
            "test_size": self.test_size,
            "resampled_train_size": self.resampled_train_size,
        }


@dataclass
class Report:
    run_id: str
    seed: int
    classifier: str
    k_folds: int
    per_fold: list[FoldResult]
    pooled_cm: ConfusionMatrix
    pooled: ClassMetrics
    fold_mean: dict[str, float]
    config: dict
    skipped: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "classifier": self.classifier,
            "k_folds": self.k_folds,
            "per_fold": [fr.as_dict() for fr in self.per_fold],
            "pooled": {"cm": self.pooled_cm.as_dict(), "metrics": self.pooled.as_dict()},
            "fold_mean": dict(self.fold_mean),
            "config": self.config,
            "skipped": list(self.skipped),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def _run_id(seed: int, classifier: str, config: dict, y: np.ndarray) -> str:
    counts = np.bincount(y, minlength=2)
    key = json.dumps(
        {
            "seed": seed,
            "classifier": classifier,
            "config": config,
            "n": int(y.shape[0]),
            "negatives": int(counts[0]),
            "positives": int(counts[1]),
        },
        sort_keys=True,
    )
    return hashlib.sha256(key.encode("utf-8")).hexdigest()[:12]


def run_cv(
    x: np.ndarray,
    y: Sequence,
    classifier: str = "rf",
    config: RunConfig | None = None,
    factory: ClassifierFactory | None = None,
    skipped: Sequence[str] | None = None,
) -> Report:
    """Full stratified CV for one classifier; returns the report.

    `classifier` picks a built-in factory ("rf" or "mlp") unless an
    explicit factory is injected, in which case the name is only recorded.
    The factory is called once per fold with (config, fold_seed).
    """
    config = config if config is not None else RunConfig()
    x = np.ascontiguousarray(x, dtype=np.float64)
    y01 = labels_to_int(y)
    if x.ndim != 2 or x.shape[0] != y01.shape[0]:
        raise FitError(f"feature matrix {x.shape} does not match {y01.shape[0]} labels")
    if factory is None:
        if classifier not in CLASSIFIER_FACTORIES:
            raise FitError(f"unknown classifier {classifier!r}; expected one of {sorted(CLASSIFIER_FACTORIES)}")
        factory = CLASSIFIER_FACTORIES[classifier]

    assignment = stratified_kfold(y01, k=config.k_folds, seed=config.seed)
    per_fold: list[FoldResult] = []
    pooled_cm = ConfusionMatrix(0, 0, 0, 0)
    for fold in range(config.k_folds):
        train_idx = assignment.train_indices(fold)
        test_idx = assignment.test_indices(fold)
        x_train, y_train = x[train_idx], y01[train_idx]
        x_test, y_test = x[test_idx], y01[test_idx]

        scaler = fit_scaler(x_train)
        x_train = apply_scaler(x_train, scaler)
        x_test = apply_scaler(x_test, scaler)
        if config.smote.enabled:
            x_train, y_train = smote_balance(
                x_train,
                y_train,
                k_neighbors=config.smote.k_neighbors,
                seed=substream_seed(config.seed, "smote", "fold", fold),
            )

        model = factory(config, substream_seed(config.seed, classifier, "fold", fold))
        model.fit(x_train, y_train)
        pred = np.asarray(model.predict(x_test)).astype(np.int64)
        cm = ConfusionMatrix.from_labels(y_test, pred)
        per_fold.append(
            FoldResult(
                fold=fold,
                cm=cm,
                metrics=metrics_from_matrix(cm),
                train_size=int(train_idx.shape[0]),
                test_size=int(test_idx.shape[0]),
                resampled_train_size=int(y_train.shape[0]),
            )
        )
        pooled_cm = pooled_cm.add(cm)

    fold_mean = {
        name: float(np.mean([getattr(fr.metrics, name) for fr in per_fold])) for name in METRIC_NAMES
    }
    config_dict = config.to_dict()
    return Report(
        run_id=_run_id(config.seed, classifier, config_dict, y01),
        seed=config.seed,
        classifier=classifier,
        k_folds=config.k_folds,
        per_fold=per_fold,
        pooled_cm=pooled_cm,
        pooled=metrics_from_matrix(pooled_cm),
        fold_mean=fold_mean,
        config=config_dict,
        skipped=list(skipped) if skipped is not None else [],
    )


def write_report_json(report: Report, path: str | Path) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8")


def write_report_csv(report: Report, path: str | Path) -> None:
    """Flat per-fold table with pooled and fold_mean summary rows."""
    lines = ["fold,tp,fn,fp,tn,accuracy,precision,recall,f1"]
    for fr in report.per_fold:
        cm, m = fr.cm, fr.metrics
        lines.append(
            f"{fr.fold},{cm.tp},{cm.fn},{cm.fp},{cm.tn},"
            f"{m.accuracy!r},{m.precision!r},{m.recall!r},{m.f1!r}"
        )
    cm, m = report.pooled_cm, report.pooled
    lines.append(
        f"pooled,{cm.tp},{cm.fn},{cm.fp},{cm.tn},{m.accuracy!r},{m.precision!r},{m.recall!r},{m.f1!r}"
    )
    fm = report.fold_mean
    lines.append(
        f"fold_mean,,,,,{fm['accuracy']!r},{fm['precision']!r},{fm['recall']!r},{fm['f1']!r}"
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
