"""
Metrics Module
Binary confusion counts, IoU and F1
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-pixel tallies with foreground = 1; addition merges tiles"""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ShapeError(f"confusion: prediction {pred.shape} and ground truth {gt.shape} differ")
    return ConfusionCounts(
        tp=int(np.count_nonzero(pred & gt)),
        fp=int(np.count_nonzero(pred & ~gt)),
        fn=int(np.count_nonzero(~pred & gt)),
        tn=int(np.count_nonzero(~pred & ~gt)),
    )


def iou(counts: ConfusionCounts) -> float:
    """tp / (tp + fp + fn); 1.0 when both masks are empty"""
    union = counts.tp + counts.fp + counts.fn
    if union == 0:
        return 1.0
    return counts.tp / union


def f1(counts: ConfusionCounts) -> float:
    """2tp / (2tp + fp + fn); 1.0 when both masks are empty"""
    denom = 2 * counts.tp + counts.fp + counts.fn
    if denom == 0:
        return 1.0
    return 2 * counts.tp / denom
