"""Classification and segmentation-overlap metrics.

The positive class throughout is malignant.  Ratios with a zero
denominator are reported as 0.0 and flagged, never raised, so callers
can still aggregate degenerate folds.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EvaluationError, ShapeMismatchError
from .maskio import DEFAULT_THRESHOLD, BinaryMask, _scan_rasters, load_mask


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary counts; positive = malignant."""

    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fn", "fp", "tn"):
            if getattr(self, name) < 0:
                raise EvaluationError(f"{name} must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def add(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fn=self.fn + other.fn,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
        )

    def as_dict(self) -> dict[str, int]:
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}

    @classmethod
    def from_labels(cls, y_true: np.ndarray, y_pred: np.ndarray) -> "ConfusionMatrix":
        """Counts from 0/1 label vectors (1 = positive)."""
        y_true = np.asarray(y_true).astype(np.int64)
        y_pred = np.asarray(y_pred).astype(np.int64)
        if y_true.shape != y_pred.shape or y_true.ndim != 1:
            raise EvaluationError(f"label shapes differ: {y_true.shape} vs {y_pred.shape}")
        if not (np.isin(y_true, (0, 1)).all() and np.isin(y_pred, (0, 1)).all()):
            raise EvaluationError("labels must be 0 or 1")
        return cls(
            tp=int(((y_true == 1) & (y_pred == 1)).sum()),
            fn=int(((y_true == 1) & (y_pred == 0)).sum()),
            fp=int(((y_true == 0) & (y_pred == 1)).sum()),
            tn=int(((y_true == 0) & (y_pred == 0)).sum()),
        )


@dataclass(frozen=True)
class ClassMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_defined: bool = True
    recall_defined: bool = True
    f1_defined: bool = True

    def as_dict(self) -> dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0.0 when both are 0."""
    if precision < 0 or recall < 0:
        raise EvaluationError("precision and recall must be nonnegative")
    denom = precision + recall
    if denom == 0:
        return 0.0
    return 2.0 * precision * recall / denom


def class_metrics(tp: int, fn: int, fp: int, tn: int) -> ClassMetrics:
    """Accuracy, precision, recall, and F1 from confusion counts."""
    cm = ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)
    if cm.total == 0:
        raise EvaluationError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision_defined = (cm.tp + cm.fp) > 0
    recall_defined = (cm.tp + cm.fn) > 0
    precision = cm.tp / (cm.tp + cm.fp) if precision_defined else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if recall_defined else 0.0
    f1_defined = (precision + recall) > 0 or (precision_defined and recall_defined)
    return ClassMetrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        precision_defined=precision_defined,
        recall_defined=recall_defined,
        f1_defined=f1_defined,
    )


def metrics_from_matrix(cm: ConfusionMatrix) -> ClassMetrics:
    return class_metrics(tp=cm.tp, fn=cm.fn, fp=cm.fp, tn=cm.tn)


@dataclass(frozen=True)
class SegMetrics:
    """Overlap of a predicted mask against a reference mask."""

    dice: float
    iou: float
    intersection: int
    pred_area: int
    true_area: int
    union: int
    vacuous: bool = False  # both masks empty; scores reported as 1.0

    def as_dict(self) -> dict:
        return {
            "dice": self.dice,
            "iou": self.iou,
            "intersection": self.intersection,
            "pred_area": self.pred_area,
            "true_area": self.true_area,
            "union": self.union,
            "vacuous": self.vacuous,
        }


def dice_iou(pred: BinaryMask | np.ndarray, true: BinaryMask | np.ndarray) -> SegMetrics:
    """Dice = 2|A&B| / (|A|+|B|) and IoU = |A&B| / |A|+|B|-|A&B|, by pixel count.

    Two empty masks score 1.0 on both and are flagged vacuous; one empty
    mask against a nonempty one scores 0.0.
    """
    a = pred.pixels if isinstance(pred, BinaryMask) else np.asarray(pred, dtype=bool)
    b = true.pixels if isinstance(true, BinaryMask) else np.asarray(true, dtype=bool)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.logical_and(a, b).sum())
    pa = int(a.sum())
    ta = int(b.sum())
    union = pa + ta - inter
    if pa + ta == 0:
        return SegMetrics(dice=1.0, iou=1.0, intersection=0, pred_area=0, true_area=0, union=0, vacuous=True)
    return SegMetrics(
        dice=2.0 * inter / (pa + ta),
        iou=inter / union,
        intersection=inter,
        pred_area=pa,
        true_area=ta,
        union=union,
        vacuous=False,
    )


@dataclass
class SegEvalResult:
    per_sample: list[tuple[str, SegMetrics]]
    skipped: list[str]

    @property
    def mean_dice(self) -> float:
        if not self.per_sample:
            raise EvaluationError("no evaluated pairs")
        return float(np.mean([m.dice for _, m in self.per_sample]))

    @property
    def mean_iou(self) -> float:
        if not self.per_sample:
            raise EvaluationError("no evaluated pairs")
        return float(np.mean([m.iou for _, m in self.per_sample]))

    def as_dict(self) -> dict:
        return {
            "n_pairs": len(self.per_sample),
            "mean_dice": self.mean_dice,
            "mean_iou": self.mean_iou,
            "per_sample": [{"sample_id": sid, **m.as_dict()} for sid, m in self.per_sample],
            "skipped": list(self.skipped),
        }


def seg_eval_batch(
    pred_dir: str | Path,
    true_dir: str | Path,
    threshold: int = DEFAULT_THRESHOLD,
) -> SegEvalResult:
    """Score every mask pair matched by filename stem across two directories.

    Stems present in only one directory, and pairs whose dimensions
    disagree, are recorded in `skipped` rather than aborting the batch.
    Pairs are evaluated in sorted stem order.
    """
    preds = _scan_rasters(Path(pred_dir))
    trues = _scan_rasters(Path(true_dir))
    per_sample: list[tuple[str, SegMetrics]] = []
    skipped: list[str] = []
    for stem in sorted(set(preds) | set(trues)):
        if stem not in preds:
            skipped.append(f"{stem}: no predicted mask")
            continue
        if stem not in trues:
            skipped.append(f"{stem}: no reference mask")
            continue
        pred = load_mask(preds[stem], threshold=threshold)
        true = load_mask(trues[stem], threshold=threshold)
        try:
            per_sample.append((stem, dice_iou(pred, true)))
        except ShapeMismatchError as exc:
            skipped.append(f"{stem}: {exc}")
    return SegEvalResult(per_sample=per_sample, skipped=skipped)
