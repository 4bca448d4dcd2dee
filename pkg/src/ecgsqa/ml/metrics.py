"""Classification metrics: support-weighted P/R/F1 and average precision."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError

METRIC_NAMES = ("accuracy", "precision_weighted", "recall_weighted", "f1_weighted", "auprc")
TABLE_COLUMNS = ("Accuracy", "Precision", "Recall", "F1 Score", "AUPRC")


@dataclass
class MetricsReport:
    accuracy: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    auprc: float | None
    confusion: list  # [[tn, fp], [fn, tp]]
    support: dict = field(default_factory=dict)  # {"clean": n0, "noisy": n1}
    meta: dict = field(default_factory=dict)
    folds: list = field(default_factory=list)

    @property
    def n_samples(self):
        return int(sum(sum(r) for r in self.confusion))

    def values(self):
        return [getattr(self, k) for k in METRIC_NAMES]

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "precision_weighted": self.precision_weighted,
            "recall_weighted": self.recall_weighted,
            "f1_weighted": self.f1_weighted,
            "auprc": self.auprc,
            "confusion": [list(map(int, r)) for r in self.confusion],
            "support": dict(self.support),
            "n_samples": self.n_samples,
            "meta": self.meta,
            "folds": [f.to_dict() for f in self.folds],
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            accuracy=doc["accuracy"],
            precision_weighted=doc["precision_weighted"],
            recall_weighted=doc["recall_weighted"],
            f1_weighted=doc["f1_weighted"],
            auprc=doc["auprc"],
            confusion=[list(r) for r in doc["confusion"]],
            support=dict(doc["support"]),
            meta=dict(doc.get("meta", {})),
            folds=[cls.from_dict(f) for f in doc.get("folds", [])],
        )


def confusion_matrix(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    cm = np.zeros((2, 2), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def average_precision(y_true, scores):
    """Area under the precision-recall staircase for class 1.

    Identical scores form a single threshold step. Returns ``None`` when
    there are no positives.
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(y_true.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    yt = y_true[order]
    tp = np.cumsum(yt)
    fp = np.cumsum(1 - yt)
    # last index of each distinct-score group
    last = np.flatnonzero(np.append(s[1:] != s[:-1], True))
    tp, fp = tp[last], fp[last]
    precision = tp / (tp + fp)
    recall = tp / n_pos
    prev = np.concatenate(([0.0], recall[:-1]))
    return float(np.sum((recall - prev) * precision))


def metrics(y_true, labels, scores):
    """Accuracy, support-weighted precision/recall/F1 and AUPRC."""
    y_true = np.asarray(y_true, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    scores = np.asarray(scores, dtype=float)
    if not (y_true.size == labels.size == scores.size):
        raise DataError("length mismatch between labels and scores")
    if y_true.size == 0:
        raise DataError("cannot score an empty set")
    cm = confusion_matrix(y_true, labels)
    total = cm.sum()
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    prec = np.zeros(2)
    rec = np.zeros(2)
    f1 = np.zeros(2)
    for c in (0, 1):
        tp = cm[c, c]
        prec[c] = tp / predicted[c] if predicted[c] else 0.0
        rec[c] = tp / support[c] if support[c] else 0.0
        denom = prec[c] + rec[c]
        f1[c] = 2 * prec[c] * rec[c] / denom if denom > 0 else 0.0
    weights = support / total

    def weighted(v):
        # plain two-term sum: no FMA or pairwise reordering, bit-reproducible
        return float(weights[0] * v[0] + weights[1] * v[1])

    return MetricsReport(
        accuracy=float(np.trace(cm) / total),
        precision_weighted=weighted(prec),
        recall_weighted=weighted(rec),
        f1_weighted=weighted(f1),
        auprc=average_precision(y_true, scores),
        confusion=cm.tolist(),
        support={"clean": int(support[0]), "noisy": int(support[1])},
    )


def mean_report(reports, meta=None):
    """Average of fold reports; confusion matrices and supports are summed.

    Folds with undefined AUPRC are left out of its mean.
    """
    reports = list(reports)
    if not reports:
        raise DataError("no reports to average")
    auprcs = [r.auprc for r in reports if r.auprc is not None]
    cm = np.sum([np.asarray(r.confusion) for r in reports], axis=0)
    return MetricsReport(
        accuracy=float(np.mean([r.accuracy for r in reports])),
        precision_weighted=float(np.mean([r.precision_weighted for r in reports])),
        recall_weighted=float(np.mean([r.recall_weighted for r in reports])),
        f1_weighted=float(np.mean([r.f1_weighted for r in reports])),
        auprc=float(np.mean(auprcs)) if auprcs else None,
        confusion=cm.tolist(),
        support={
            "clean": int(sum(r.support.get("clean", 0) for r in reports)),
            "noisy": int(sum(r.support.get("noisy", 0) for r in reports)),
        },
        meta=dict(meta or {}),
        folds=reports,
    )


def _fmt(v):
    return "   n/a" if v is None else f"{v:6.3f}"


def format_table(rows, label_headers=("Train", "Test")):
    """Aligned plain-text table: label columns followed by the five metrics.

    ``rows`` is a sequence of ``(labels_tuple, MetricsReport)``.
    """
    rows = list(rows)
    widths = [len(h) for h in label_headers]
    for labels, _ in rows:
        widths = [max(w, len(str(x))) for w, x in zip(widths, labels)]
    head = "  ".join(h.ljust(w) for h, w in zip(label_headers, widths))
    head += "  " + "  ".join(c.rjust(9) for c in TABLE_COLUMNS)
    lines = [head, "-" * len(head)]
    for labels, rep in rows:
        line = "  ".join(str(x).ljust(w) for x, w in zip(labels, widths))
        line += "  " + "  ".join(_fmt(v).rjust(9) for v in rep.values())
        lines.append(line)
    return "\n".join(lines) + "\n"
