"""
Pretrain Module
Masked-patch reconstruction used to pretrain the encoder from scratch
"""

from typing import Tuple

import numpy as np

from ..encoder import ImageEncoder, unfold_patches
from ..tensor import Linear, Module, Tensor
from .losses import reconstruction_loss


class ReconstructionHead(Module):
    """Linear map from an encoder token back to its patch's pixels"""

    def __init__(self, embed_dim: int, patch_size: int, rng: np.random.Generator):
        self.proj = Linear(embed_dim, patch_size * patch_size * 3, rng)

    def forward(self, tokens: Tensor) -> Tensor:
        return self.proj(tokens)


def mask_patches(image: np.ndarray, patch_size: int, ratio: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Zero a random round(ratio·N) subset of patches

    Returns:
        (masked image copy, sorted indices of the zeroed patches)
    """
    h, w, c = image.shape
    g_h, g_w = h // patch_size, w // patch_size
    count = max(1, int(round(ratio * g_h * g_w)))
    hidden = np.sort(rng.choice(g_h * g_w, size=count, replace=False))
    masked = image.reshape(g_h, patch_size, g_w, patch_size, c).copy()
    rows, cols = np.divmod(hidden, g_w)
    masked[rows, :, cols, :, :] = 0.0
    return masked.reshape(h, w, c), hidden


def pretrain_loss(encoder: ImageEncoder, head: ReconstructionHead, image: np.ndarray, rng: np.random.Generator, ratio: float) -> Tensor:
    """MSE between the reconstruction of the hidden patches and their original pixels"""
    config = encoder.config
    masked, hidden = mask_patches(image, config.patch_size, ratio, rng)
    tokens = encoder.encode(masked).final.reshape(config.num_tokens, config.embed_dim)
    predicted = head(tokens[hidden])
    target = unfold_patches(image, config.patch_size)[hidden]
    return reconstruction_loss(predicted, target)
