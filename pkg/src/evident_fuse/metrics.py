"""Classification metrics and the report written by ``evaluate``."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from sklearn.metrics import f1_score, precision_recall_fscore_support, roc_auc_score

from .errors import ValidationError


@dataclass
class MetricsReport:
    """Rates in [0, 1].  ``macro_auc`` is None when undefined (a class absent)."""

    accuracy: float
    macro_f1: float
    macro_auc: Optional[float]
    mean_uncertainty_id: Optional[float] = None
    mean_uncertainty_ood: Optional[float] = None
    n_samples: int = 0
    per_class: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "MetricsReport":
        return cls(**obj)


def macro_auc(labels: np.ndarray, probs: np.ndarray) -> Optional[float]:
    """Macro one-vs-rest ROC AUC; None unless every class has positives and negatives."""
    k = probs.shape[1]
    present = np.unique(labels)
    if labels.size < 2 or present.size != k:
        return None
    if k == 2:
        return float(roc_auc_score(labels, probs[:, 1]))
    return float(roc_auc_score(labels, probs, multi_class="ovr", average="macro", labels=np.arange(k)))


def classification_report(labels, predicted, probs, class_count: int,
                          uncertainty=None, ood_uncertainty=None) -> MetricsReport:
    labels = np.asarray(labels, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if labels.size == 0:
        raise ValidationError("cannot evaluate an empty split")
    classes = np.arange(class_count)
    prec, rec, f1, support = precision_recall_fscore_support(
        labels, predicted, labels=classes, zero_division=0
    )
    per_class = [
        {"class": int(c), "precision": float(p), "recall": float(r), "f1": float(f), "support": int(s)}
        for c, p, r, f, s in zip(classes, prec, rec, f1, support)
    ]
    # macro-F1 over classes that occur in either labels or predictions
    seen = np.union1d(labels, predicted)
    return MetricsReport(
        accuracy=float(np.mean(labels == predicted)),
        macro_f1=float(f1_score(labels, predicted, labels=seen, average="macro", zero_division=0)),
        macro_auc=macro_auc(labels, np.asarray(probs)),
        mean_uncertainty_id=None if uncertainty is None else float(np.mean(uncertainty)),
        mean_uncertainty_ood=None if ood_uncertainty is None else float(np.mean(ood_uncertainty)),
        n_samples=int(labels.size),
        per_class=per_class,
    )
