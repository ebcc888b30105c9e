"""Confusion-matrix metrics and the tabular report format."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

__all__ = ["ConfusionMatrix", "MetricsReport", "confusion_matrix", "metrics",
           "mean_report", "format_table"]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (c < 0).any():
            raise ValueError("confusion counts must be non-negative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(y_true, y_pred, n_classes: int) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("label and prediction arrays differ in length")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts)


@dataclass
class MetricsReport:
    accuracy: float
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    precision_undefined: tuple[bool, ...]
    recall_undefined: tuple[bool, ...]
    f1_undefined: tuple[bool, ...]
    confusion: ConfusionMatrix
    class_names: tuple[str, ...] = ()
    model_name: str = ""
    folds: list["MetricsReport"] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.precision)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "model": self.model_name,
            "accuracy": self.accuracy,
            "classes": list(self.class_names),
            "precision": list(self.precision),
            "recall": list(self.recall),
            "f1": list(self.f1),
            "precision_undefined": list(self.precision_undefined),
            "recall_undefined": list(self.recall_undefined),
            "f1_undefined": list(self.f1_undefined),
            "confusion": self.confusion.counts.tolist(),
        }
        if self.folds:
            out["folds"] = [f.to_dict() for f in self.folds]
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def metrics(cm: ConfusionMatrix, class_names: Sequence[str] = (), model_name: str = "") -> MetricsReport:
    """Accuracy plus per-class precision, recall and F1.

    Zero denominators give 0 with the matching ``*_undefined`` flag set.
    """
    counts = cm.counts
    total = cm.total
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    diag = np.diag(counts)
    col = counts.sum(axis=0)
    row = counts.sum(axis=1)
    precision, recall, f1 = [], [], []
    p_undef, r_undef, f_undef = [], [], []
    for k in range(cm.n_classes):
        p = diag[k] / col[k] if col[k] else 0.0
        r = diag[k] / row[k] if row[k] else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        precision.append(float(p))
        recall.append(float(r))
        f1.append(float(f))
        p_undef.append(not col[k])
        r_undef.append(not row[k])
        f_undef.append(not (p + r > 0))
    names = tuple(class_names) or tuple(str(k) for k in range(cm.n_classes))
    return MetricsReport(float(diag.sum() / total), tuple(precision), tuple(recall), tuple(f1),
                         tuple(p_undef), tuple(r_undef), tuple(f_undef), cm, names, model_name)


def mean_report(folds: Sequence[MetricsReport], model_name: str = "") -> MetricsReport:
    """Unweighted mean of each metric across folds; confusion counts are summed."""
    if not folds:
        raise ValueError("no fold reports to average")

    def avg(attr):
        return tuple(float(v) for v in np.mean([getattr(f, attr) for f in folds], axis=0))

    def any_flag(attr):
        return tuple(bool(v) for v in np.any([getattr(f, attr) for f in folds], axis=0))

    cm = ConfusionMatrix(sum(f.confusion.counts for f in folds))
    return MetricsReport(
        float(np.mean([f.accuracy for f in folds])),
        avg("precision"), avg("recall"), avg("f1"),
        any_flag("precision_undefined"), any_flag("recall_undefined"), any_flag("f1_undefined"),
        cm, folds[0].class_names, model_name or folds[0].model_name, list(folds),
        [w for f in folds for w in f.warnings],
    )


def _fmt(value: float, undefined: bool) -> str:
    return f"{value:.3f}{'*' if undefined else ' '}"


def format_table(reports: Sequence[MetricsReport], title: str = "", per_fold: bool = False) -> str:
    """Render reports as rows: model, accuracy %, then precision/recall/F1 per class.

    A trailing ``*`` marks a metric whose denominator was zero.
    """
    if not reports:
        return ""
    names = reports[0].class_names
    cw = max(6, *(len(n) for n in names))  # one cell per class
    width = (cw + 1) * len(names)
    name_w = max(24, *(len(r.model_name) + 2 for r in reports))
    head1 = (f"{'Model':<{name_w}}{'A, %':>9}  | {'Precision':^{width}}| "
             f"{'Recall':^{width}}| {'F1':^{width}}")
    cls = "".join(f"{n:>{cw}} " for n in names)
    head2 = f"{'':<{name_w}}{'':>9}  | {cls}| {cls}| {cls}"
    lines = [title] if title else []
    lines += [head1, head2, "-" * len(head1)]

    def row(label, r):
        cells = [
            "".join(f"{_fmt(v, u):>{cw}} " for v, u in zip(vals, undef))
            for vals, undef in ((r.precision, r.precision_undefined),
                                (r.recall, r.recall_undefined),
                                (r.f1, r.f1_undefined))
        ]
        return f"{label:<{name_w}}{100 * r.accuracy:>9.3f}  | " + "| ".join(cells)

    for r in reports:
        if per_fold and r.folds:
            for i, f in enumerate(r.folds, start=1):
                lines.append(row(f"  fold {i}", f))
            lines.append(row(f"{r.model_name} (mean)", r))
        else:
            lines.append(row(r.model_name, r))
    return "\n".join(lines)
