"""Per-class accuracy bookkeeping and the OS*/UNK/OS/H score family."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from onering.model import OneRingModel, forward, predict
from onering.scenario import Dataset, collapse_to_unknown


@dataclass(frozen=True)
class MetricsReport:
    """Scores of one evaluation pass; truth must arrive with private classes
    already collapsed to the unknown index n_known."""

    per_class_accuracy: dict[int, float]
    os_star: float
    unk: float
    os: float
    h: float
    counts: dict[int, tuple[int, int]]  # class -> (correct, total)
    n_known: int

    def to_json_dict(self) -> dict:
        return {
            "os_star": self.os_star,
            "unk": self.unk,
            "os": self.os,
            "h": self.h,
            "per_class": {str(c): acc for c, acc in sorted(self.per_class_accuracy.items())},
        }


def harmonic_mean(a: float, b: float) -> float:
    return 0.0 if a + b == 0 else 2.0 * a * b / (a + b)


def compute_metrics(predictions, truth, n_known: int, known_classes=None) -> MetricsReport:
    """Per-class accuracies plus OS* (known mean), UNK, OS and H.

    known_classes, when given, is the set of known classes that must appear
    in the truth; a missing one raises.
    """
    preds = np.asarray(predictions, dtype=np.int64)
    y = np.asarray(truth, dtype=np.int64)
    if preds.shape != y.shape:
        raise ValueError(f"prediction/truth length mismatch: {preds.shape} vs {y.shape}")
    if y.size == 0:
        raise ValueError("cannot compute metrics on zero samples")
    if y.min() < 0 or y.max() > n_known:
        raise ValueError(f"truth classes must lie in [0, {n_known}] (unknown collapsed)")

    present = sorted(set(y.tolist()))
    counts: dict[int, tuple[int, int]] = {}
    accuracy: dict[int, float] = {}
    for cls in present:
        mask = y == cls
        total = int(mask.sum())
        correct = int((preds[mask] == cls).sum())
        counts[cls] = (correct, total)
        accuracy[cls] = correct / total

    if known_classes is not None:
        known = sorted(int(c) for c in known_classes)
        for cls in known:
            if cls not in accuracy:
                raise ValueError(f"no samples for known class {cls}")
    else:
        known = [c for c in present if c < n_known]
    if not known:
        raise ValueError("no known-class samples in truth")

    os_star = float(np.mean([accuracy[c] for c in known]))
    unk = accuracy.get(n_known, 0.0)
    os = (n_known / (n_known + 1)) * os_star + (1.0 / (n_known + 1)) * unk
    return MetricsReport(
        per_class_accuracy=accuracy,
        os_star=os_star,
        unk=unk,
        os=os,
        h=harmonic_mean(os_star, unk),
        counts=counts,
        n_known=n_known,
    )


def evaluate_model(model: OneRingModel, data: Dataset, known_classes=None) -> MetricsReport:
    """Predict a labeled dataset and score it with private classes collapsed."""
    _, logits = forward(model, data.samples)
    truth = collapse_to_unknown(data.labels, model.n_known)
    return compute_metrics(predict(logits), truth, model.n_known, known_classes)
