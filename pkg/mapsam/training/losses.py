"""
Losses Module
Focal, dice and the two-head composite segmentation loss
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..config import LossConfig
from ..errors import ShapeError
from ..tensor import Tensor, as_tensor, clamp, interpolate_bilinear, sigmoid

PROB_FLOOR = 1e-7


def _check_pair(probs: Tensor, gt: np.ndarray, name: str) -> np.ndarray:
    gt = np.asarray(gt, dtype=np.float64)
    if probs.shape != gt.shape:
        raise ShapeError(f"{name}: prediction {probs.shape} and ground truth {gt.shape} differ")
    return gt


def focal_loss(probs: Tensor, gt: np.ndarray, gamma: float = 2.0, alpha: float = 0.5) -> Tensor:
    """
    Mean over pixels of −α_t (1 − p_t)^γ log p_t

    Probabilities are clamped to [1e-7, 1 − 1e-7] first.
    """
    probs = as_tensor(probs)
    g = _check_pair(probs, gt, "focal_loss")
    p = clamp(probs, PROB_FLOOR, 1.0 - PROB_FLOOR)
    p_t = p * g + (1.0 - p) * (1.0 - g)
    alpha_t = alpha * g + (1.0 - alpha) * (1.0 - g)
    return (-(alpha_t * (1.0 - p_t) ** gamma * p_t.log())).mean()


def dice_loss(probs: Tensor, gt: np.ndarray, eps: float = 1.0) -> Tensor:
    """Soft dice: 1 − (2Σpg + eps) / (Σp + Σg + eps)"""
    probs = as_tensor(probs)
    g = _check_pair(probs, gt, "dice_loss")
    overlap = (probs * g).sum()
    return 1.0 - (2.0 * overlap + eps) / (probs.sum() + float(g.sum()) + eps)


@dataclass
class LossReport:
    """Per-head losses as tape tensors plus their focal/dice parts as floats"""

    coarse: Tensor
    final: Tensor
    overall: Tensor
    focal_coarse: float = float("nan")
    dice_coarse: float = float("nan")
    focal_final: float = float("nan")
    dice_final: float = float("nan")

    @property
    def values(self):
        return self.coarse.item(), self.final.item(), self.overall.item()


def head_loss(logits: Tensor, gt: np.ndarray, config: LossConfig):
    """λ·focal + (1 − λ)·dice on sigmoid(logits); returns (loss, focal, dice)"""
    probs = sigmoid(logits)
    focal = focal_loss(probs, gt, config.focal_gamma, config.focal_alpha)
    dice = dice_loss(probs, gt, config.dice_eps)
    return config.lambda_ * focal + (1.0 - config.lambda_) * dice, focal, dice


def composite_loss(coarse_logits: Tensor, final_logits: Tensor, gt: np.ndarray, config: LossConfig) -> LossReport:
    """
    L_overall = L_coarse + L_final, both heads supervised at ground-truth resolution

    Args:
        coarse_logits: h×w×1 fused coarse logits (upsampled here)
        final_logits: H×W×1 decoder logits
        gt: H×W binary mask
        config: Loss weights
    """
    gt = np.asarray(gt, dtype=np.float64)
    if gt.ndim != 2:
        raise ShapeError(f"ground truth must be H×W, got {gt.shape}")
    target = gt[..., None]
    if coarse_logits.shape[:2] != gt.shape:
        coarse_logits = interpolate_bilinear(coarse_logits, gt.shape[0], gt.shape[1])
    coarse, focal_c, dice_c = head_loss(coarse_logits, target, config)
    final, focal_f, dice_f = head_loss(final_logits, target, config)
    return LossReport(
        coarse=coarse,
        final=final,
        overall=coarse + final,
        focal_coarse=focal_c.item(),
        dice_coarse=dice_c.item(),
        focal_final=focal_f.item(),
        dice_final=dice_f.item(),
    )


def batch_loss(reports: Sequence[LossReport]) -> LossReport:
    """Average each head over the batch separately; the overall loss stays their sum"""
    if not reports:
        raise ShapeError("batch_loss needs at least one report")
    n = float(len(reports))
    coarse = reports[0].coarse
    final = reports[0].final
    for report in reports[1:]:
        coarse = coarse + report.coarse
        final = final + report.final
    if len(reports) > 1:
        coarse = coarse / n
        final = final / n
    return LossReport(
        coarse=coarse,
        final=final,
        overall=coarse + final,
        focal_coarse=float(np.mean([r.focal_coarse for r in reports])),
        dice_coarse=float(np.mean([r.dice_coarse for r in reports])),
        focal_final=float(np.mean([r.focal_final for r in reports])),
        dice_final=float(np.mean([r.dice_final for r in reports])),
    )


def reconstruction_loss(predicted: Tensor, target: np.ndarray) -> Tensor:
    """Mean squared error over the masked patches"""
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape:
        raise ShapeError(f"reconstruction: prediction {predicted.shape} and target {target.shape} differ")
    diff = predicted - target
    return (diff * diff).mean()
