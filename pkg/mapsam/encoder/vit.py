"""
ViT Encoder Module
Miniature vision transformer with adaptable query/value projections and per-layer feature taps
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ..adaptation import AdaptationMode, AdaptedLinear
from ..config import EncoderConfig
from ..errors import ShapeError
from ..tensor import LayerNorm, Linear, Module, Parameter, Tensor, gelu, matmul, softmax

logger = logging.getLogger(__name__)


@dataclass
class LayerFeatures:
    """Feature grids ((H/p)×(W/p)×embed_dim) keyed by 1-based tap layer, plus the final-layer grid F"""

    taps: Dict[int, Tensor]
    final: Tensor

    @property
    def grid_shape(self):
        return self.final.shape[:2]


def image_to_array(raster: np.ndarray) -> np.ndarray:
    """uint8 H×W×3 raster -> f64 values in [0, 1]"""
    return np.asarray(raster, dtype=np.float64) / 255.0


def unfold_patches(image: np.ndarray, patch_size: int) -> np.ndarray:
    """
    Split an H×W×3 image into non-overlapping p×p patches

    Returns:
        (H/p · W/p)×(p·p·3) array, patches in row-major grid order
    """
    h, w, c = image.shape
    g_h, g_w = h // patch_size, w // patch_size
    patches = image.reshape(g_h, patch_size, g_w, patch_size, c).transpose(0, 2, 1, 3, 4)
    return patches.reshape(g_h * g_w, patch_size * patch_size * c)


class PatchEmbedding(Module):
    """Linear patch projection plus learned absolute positional embeddings"""

    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        self.config = config
        patch_dim = config.patch_size * config.patch_size * 3
        self.proj = Linear(patch_dim, config.embed_dim, rng)
        self.pos_embed = Parameter(rng.normal(0.0, 0.02, size=(config.num_tokens, config.embed_dim)))

    def forward(self, image: np.ndarray) -> Tensor:
        return patchify(self, image)


def patchify(embedding: PatchEmbedding, image: np.ndarray) -> Tensor:
    """
    Project patches of an image with values in [0, 1] into tokens×embed_dim

    Raises:
        ShapeError: if the image is not image_size×image_size×3
    """
    config = embedding.config
    expected = (config.image_size, config.image_size, 3)
    if tuple(image.shape) != expected:
        raise ShapeError(f"patchify expects an image of shape {expected}, got {tuple(image.shape)}")
    patches = Tensor(unfold_patches(np.asarray(image, dtype=np.float64), config.patch_size))
    return embedding.proj(patches) + embedding.pos_embed


class MultiHeadAttention(Module):
    """
    Self-attention with adaptable W_q / W_v and frozen-at-finetune W_k / output projection
    """

    def __init__(self, embed_dim: int, num_heads: int, rng: np.random.Generator):
        self.num_heads = num_heads
        self.head_dim = embed_dim // num_heads
        self.q_proj = AdaptedLinear(embed_dim, embed_dim, rng)
        self.k_proj = Linear(embed_dim, embed_dim, rng)
        self.v_proj = AdaptedLinear(embed_dim, embed_dim, rng)
        self.out_proj = Linear(embed_dim, embed_dim, rng)

    def _split_heads(self, x: Tensor) -> Tensor:
        tokens = x.shape[0]
        return x.reshape(tokens, self.num_heads, self.head_dim).transpose(1, 0, 2)

    def attention_weights(self, x: Tensor) -> Tensor:
        """heads×T×T softmax(QKᵀ/√d_h)"""
        q = self._split_heads(self.q_proj(x))
        k = self._split_heads(self.k_proj(x))
        logits = matmul(q, k.transpose(0, 2, 1)) * (1.0 / math.sqrt(self.head_dim))
        return softmax(logits, axis=-1)

    def forward(self, x: Tensor) -> Tensor:
        tokens, dim = x.shape
        weights = self.attention_weights(x)
        v = self._split_heads(self.v_proj(x))
        out = matmul(weights, v).transpose(1, 0, 2).reshape(tokens, dim)
        return self.out_proj(out)


class MLP(Module):
    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        self.fc1 = Linear(in_dim, hidden_dim, rng, bias=bias)
        self.fc2 = Linear(hidden_dim, out_dim, rng, bias=bias)

    def forward(self, x: Tensor) -> Tensor:
        return self.fc2(gelu(self.fc1(x)))


class EncoderBlock(Module):
    """Pre-norm transformer block: x + MHA(LN(x)), then x + MLP(LN(x))"""

    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        dim = config.embed_dim
        self.norm1 = LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, config.num_heads, rng)
        self.norm2 = LayerNorm(dim)
        self.mlp = MLP(dim, dim * config.mlp_ratio, dim, rng)

    def forward(self, x: Tensor) -> Tensor:
        return attention_block(self, x)


def attention_block(block: EncoderBlock, x: Tensor) -> Tensor:
    x = x + block.attn(block.norm1(x))
    return x + block.mlp(block.norm2(x))


class ImageEncoder(Module):
    """Patch stem followed by `num_layers` pre-norm blocks"""

    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        self.config = config
        self.patch_embed = PatchEmbedding(config, rng)
        self.blocks = [EncoderBlock(config, rng) for _ in range(config.num_layers)]

    def forward(self, image: np.ndarray) -> LayerFeatures:
        return self.encode(image)

    def encode(self, image: np.ndarray) -> LayerFeatures:
        """
        Run every block and reshape the tokens of each tap layer into a grid

        Args:
            image: image_size×image_size×3 values in [0, 1]

        Returns:
            LayerFeatures with one grid per configured tap layer
        """
        g = self.config.grid_size
        taps: Dict[int, Tensor] = {}
        x = patchify(self.patch_embed, image)
        for index, block in enumerate(self.blocks, start=1):
            x = block(x)
            if index in self.config.feature_tap_layers:
                taps[index] = x.reshape(g, g, self.config.embed_dim)
        return LayerFeatures(taps=taps, final=taps[self.config.num_layers])

    def adapted_layers(self) -> List[AdaptedLinear]:
        layers = []
        for block in self.blocks:
            layers.extend([block.attn.q_proj, block.attn.v_proj])
        return layers

    def enable_adaptation(self, mode: AdaptationMode, rank: int, rng: np.random.Generator, scale: float = 1.0, init_std: float = 0.01):
        """Freeze every encoder weight, then attach LoRA/DoRA to each block's Q and V projections"""
        self.freeze()
        for layer in self.adapted_layers():
            layer.adapt(mode, rank, rng, scale=scale, init_std=init_std)
        logger.info(
            "Injected %s (rank %d) into Q/V projections of %d encoder blocks",
            AdaptationMode(mode).value, rank, len(self.blocks),
        )

    @property
    def adaptation_mode(self) -> AdaptationMode:
        return self.blocks[0].attn.q_proj.mode
