"""
Auto-Prompt Generator Module
Per-layer coarse heads, multi-layer fusion and automatic point selection
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..encoder import LayerFeatures
from ..errors import ShapeError
from ..tensor import LayerNorm, Module, Parameter, Tensor, as_tensor, conv1x1, gelu, interpolate_bilinear
from .types import CoarseMask, Point

logger = logging.getLogger(__name__)


def _conv_weight(cin: int, cout: int, rng: np.random.Generator) -> Parameter:
    bound = 1.0 / np.sqrt(cin)
    return Parameter(rng.uniform(-bound, bound, size=(cin, cout)))


class CoarseHead(Module):
    """
    Three 1×1 convolutions reducing C -> C/4 -> C/16 -> 1, with LayerNorm + GELU between
    """

    def __init__(self, channels: int, rng: np.random.Generator):
        c1, c2 = channels // 4, channels // 16
        self.channels = channels
        self.conv1_weight = _conv_weight(channels, c1, rng)
        self.conv1_bias = Parameter(np.zeros(c1))
        self.conv2_weight = _conv_weight(c1, c2, rng)
        self.conv2_bias = Parameter(np.zeros(c2))
        self.conv3_weight = _conv_weight(c2, 1, rng)
        self.conv3_bias = Parameter(np.zeros(1))
        self.norm1 = LayerNorm(c1)
        self.norm2 = LayerNorm(c2)

    def forward(self, tap: Tensor) -> Tensor:
        return coarse_head(self, tap)


def coarse_head(head: CoarseHead, tap: Tensor) -> Tensor:
    """
    h×w×C feature grid -> h×w×1 foreground logits

    Raises:
        ShapeError: if C differs from the head's channel count
    """
    if tap.ndim != 3 or tap.shape[-1] != head.channels:
        raise ShapeError(f"coarse head expects h×w×{head.channels}, got {tap.shape}")
    x = gelu(head.norm1(conv1x1(tap, head.conv1_weight, head.conv1_bias)))
    x = gelu(head.norm2(conv1x1(x, head.conv2_weight, head.conv2_bias)))
    return conv1x1(x, head.conv3_weight, head.conv3_bias)


def fuse_layers(per_layer_logits: Sequence[Tensor], threshold: float = 0.5) -> CoarseMask:
    """
    Average per-layer logits element-wise (logit space), then sigmoid and binarize

    Raises:
        ShapeError: on an empty list or mismatched shapes
    """
    if not per_layer_logits:
        raise ShapeError("fuse_layers needs at least one layer prediction")
    shape = per_layer_logits[0].shape
    for logits in per_layer_logits[1:]:
        if logits.shape != shape:
            raise ShapeError(f"fuse_layers: shape {logits.shape} differs from {shape}")
    total = per_layer_logits[0]
    for logits in per_layer_logits[1:]:
        total = total + logits
    fused = total if len(per_layer_logits) == 1 else total / float(len(per_layer_logits))
    return CoarseMask(logits=fused, threshold=threshold)


def select_points(mask: CoarseMask, image_size: int) -> Tuple[Point, Point]:
    """
    Positive/negative point prompts at the extrema of the upsampled probability map

    Ties resolve to the first cell in row-major order.

    Returns:
        (positive point, negative point) as (row, col) pixels
    """
    probs = as_tensor(mask.probabilities[..., None])
    upsampled = interpolate_bilinear(probs, image_size, image_size).data[..., 0]
    flat = upsampled.reshape(-1)
    if np.all(flat == flat[0]):
        logger.warning("Coarse probability map is constant; both point prompts fall on (0, 0)")
    positive = divmod(int(np.argmax(flat)), image_size)
    negative = divmod(int(np.argmin(flat)), image_size)
    return positive, negative


class AutoPromptGenerator(Module):
    """One independent coarse head per encoder tap layer"""

    def __init__(self, tap_layers: Sequence[int], channels: int, rng: np.random.Generator, threshold: float = 0.5):
        self.tap_layers = list(tap_layers)
        self.threshold = threshold
        self.heads = [CoarseHead(channels, rng) for _ in self.tap_layers]

    def forward(self, features: LayerFeatures) -> Tuple[Dict[int, Tensor], CoarseMask]:
        """
        Returns:
            (per-tap logits keyed by layer, fused CoarseMask)
        """
        per_layer: Dict[int, Tensor] = {}
        for layer, head in zip(self.tap_layers, self.heads):
            if layer not in features.taps:
                raise ShapeError(f"encoder did not export tap layer {layer}")
            per_layer[layer] = head(features.taps[layer])
        return per_layer, fuse_layers(list(per_layer.values()), self.threshold)
