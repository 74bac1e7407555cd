"""Regression and binarized-classification metrics for score predictions.

R-squared here is the residual/total sum-of-squares definition (not a
squared correlation); "clickbait" is always the positive class and a
score exactly at the threshold counts as positive.  Degenerate cases
never raise: a zero-variance truth makes R-squared NaN with a flag, and
classification zero-divisions yield 0.0 with the offending metric named
in the report's flag list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from baitscore.data import CLICKBAIT, NO_CLICKBAIT, RatioStat


class MetricsError(ValueError):
    """Raised on malformed metric inputs (length mismatch, empty lists)."""


@dataclass(frozen=True)
class RegressionMetrics:
    mse: float
    rmse: float
    mae: float
    r2: float
    r2_defined: bool


@dataclass(frozen=True)
class ClassificationMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    #: metrics whose denominator was zero and were reported as 0.0
    zero_division: tuple[str, ...] = ()


@dataclass(frozen=True)
class MetricsReport:
    """Everything the evaluate command reports, JSON-serializable."""

    regression: RegressionMetrics
    classification: ClassificationMetrics
    n: int
    ratio: RatioStat
    threshold: float = 0.5

    def to_json_obj(self) -> dict:
        reg, cls = self.regression, self.classification
        return {
            "n": self.n,
            "mse": reg.mse,
            "rmse": reg.rmse,
            "mae": reg.mae,
            "r2": reg.r2 if reg.r2_defined else None,
            "r2_defined": reg.r2_defined,
            "precision": cls.precision,
            "recall": cls.recall,
            "f1": cls.f1,
            "accuracy": cls.accuracy,
            "zero_division": list(cls.zero_division),
            "threshold": self.threshold,
            "truth_ratio": self.ratio.display(),
        }

    def table(self) -> str:
        """Human-readable two-column table."""
        obj = self.to_json_obj()
        rows = []
        for key in ("n", "mse", "rmse", "mae", "r2", "precision", "recall",
                    "f1", "accuracy", "truth_ratio"):
            value = obj[key]
            if value is None:
                text = "undefined (zero-variance truth)"
            elif isinstance(value, float):
                text = f"{value:.6f}"
            else:
                text = str(value)
            rows.append((key, text))
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v}" for k, v in rows]
        if obj["zero_division"]:
            flagged = ", ".join(obj["zero_division"])
            lines.append(f"{'flags':<{width}}  zero-division in: {flagged}")
        return "\n".join(lines)


def _paired_arrays(pred: Sequence[float], truth: Sequence[float]):
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.ndim != 1 or t.ndim != 1:
        raise MetricsError("pred and truth must be one-dimensional")
    if p.shape != t.shape:
        raise MetricsError(f"length mismatch: {p.shape[0]} predictions, {t.shape[0]} truths")
    if p.shape[0] == 0:
        raise MetricsError("cannot compute metrics on empty inputs")
    return p, t


def regression_metrics(pred: Sequence[float], truth: Sequence[float]) -> RegressionMetrics:
    """MSE, RMSE, MAE, and R-squared of predicted scores against truths.

    A zero-variance truth vector leaves R-squared undefined: it comes
    back NaN with r2_defined False rather than raising.
    """
    p, t = _paired_arrays(pred, truth)
    residuals = p - t
    mse = float(np.mean(residuals**2))
    rmse = math.sqrt(mse)
    mae = float(np.mean(np.abs(residuals)))
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    # identical truths must read as zero variance even when the float
    # mean rounds a hair off the common value
    if np.all(t == t[0]):
        ss_tot = 0.0
    if ss_tot == 0.0:
        return RegressionMetrics(mse=mse, rmse=rmse, mae=mae, r2=math.nan, r2_defined=False)
    return RegressionMetrics(mse=mse, rmse=rmse, mae=mae, r2=1.0 - ss_res / ss_tot,
                             r2_defined=True)


def binarize(score: float, threshold: float = 0.5) -> str:
    """Class label for a score: clickbait iff score >= threshold."""
    return CLICKBAIT if score >= threshold else NO_CLICKBAIT


def _positive_mask(labels: Sequence) -> np.ndarray:
    """Truth labels to a boolean is-clickbait mask.

    Accepts the string class labels, booleans, or 0/1 numbers, so truth
    files and quick numeric fixtures both work.
    """
    mask = np.empty(len(labels), dtype=bool)
    for i, label in enumerate(labels):
        if isinstance(label, str):
            if label == CLICKBAIT:
                mask[i] = True
            elif label == NO_CLICKBAIT:
                mask[i] = False
            else:
                raise MetricsError(f"unknown class label {label!r}")
        elif isinstance(label, (bool, np.bool_)):
            mask[i] = bool(label)
        elif isinstance(label, (int, float, np.integer, np.floating)):
            if label not in (0, 1):
                raise MetricsError(f"numeric class label must be 0 or 1, got {label!r}")
            mask[i] = bool(label)
        else:
            raise MetricsError(f"unsupported class label type {type(label).__name__}")
    return mask


def classification_metrics(
    pred_scores: Sequence[float],
    truth_classes: Sequence,
    threshold: float = 0.5,
) -> ClassificationMetrics:
    """Precision/recall/F1/accuracy of thresholded scores, clickbait positive."""
    if len(pred_scores) != len(truth_classes):
        raise MetricsError(
            f"length mismatch: {len(pred_scores)} scores, {len(truth_classes)} classes"
        )
    if len(pred_scores) == 0:
        raise MetricsError("cannot compute metrics on empty inputs")
    scores = np.asarray(pred_scores, dtype=np.float64)
    pred_pos = scores >= threshold
    truth_pos = _positive_mask(truth_classes)

    tp = int(np.sum(pred_pos & truth_pos))
    fp = int(np.sum(pred_pos & ~truth_pos))
    fn = int(np.sum(~pred_pos & truth_pos))
    tn = int(np.sum(~pred_pos & ~truth_pos))

    flags = []
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append("f1")
    accuracy = (tp + tn) / len(scores)
    return ClassificationMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        true_negatives=tn,
        zero_division=tuple(flags),
    )


def mean_judgment(judgments: Sequence[float]) -> float:
    """Arithmetic mean of annotator judgments; empty input is an error."""
    if len(judgments) == 0:
        raise MetricsError("mean_judgment needs at least one judgment")
    return float(np.mean(np.asarray(judgments, dtype=np.float64)))


def full_report(
    pred_scores: Sequence[float],
    truth_means: Sequence[float],
    threshold: float = 0.5,
) -> MetricsReport:
    """Complete report: regression metrics against truth means plus the
    classification view with both sides thresholded identically."""
    p, t = _paired_arrays(pred_scores, truth_means)
    truth_classes = [binarize(v, threshold) for v in t]
    n_clickbait = sum(1 for c in truth_classes if c == CLICKBAIT)
    return MetricsReport(
        regression=regression_metrics(p, t),
        classification=classification_metrics(p, truth_classes, threshold),
        n=int(p.shape[0]),
        ratio=RatioStat(n_posts=len(truth_classes), n_clickbait=n_clickbait,
                        n_not=len(truth_classes) - n_clickbait),
        threshold=threshold,
    )
