"""Classification metrics over intention labels (-1, 0, +1)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CLASS_VALUES = (-1, 0, 1)  # pull, idle, push


@dataclass
class ClassificationReport:
    confusion: np.ndarray  # rows = truth, columns = prediction, order (pull, idle, push)
    accuracy: float
    balanced_accuracy: float
    recalls: dict[int, float]
    absent_classes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "balanced_accuracy": self.balanced_accuracy,
            "recalls": {str(k): v for k, v in self.recalls.items()},
            "absent_classes": self.absent_classes,
        }


def classification_metrics(predictions, labels) -> ClassificationReport:
    pred = np.asarray(predictions, dtype=int)
    true = np.asarray(labels, dtype=int)
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.shape} predictions vs {true.shape} labels")
    if true.size == 0:
        raise ValueError("no samples")
    conf = np.zeros((3, 3), dtype=int)
    np.add.at(conf, (true + 1, pred + 1), 1)
    accuracy = float(np.trace(conf) / conf.sum())
    recalls = {}
    absent = []
    for i, cls in enumerate(CLASS_VALUES):
        row = conf[i].sum()
        if row == 0:
            absent.append(cls)
        else:
            recalls[cls] = float(conf[i, i] / row)
    balanced = float(np.mean(list(recalls.values())))
    return ClassificationReport(conf, accuracy, balanced, recalls, absent)
