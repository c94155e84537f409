"""
Decoder Layer Module
One refinement step: token self-attention, masked cross-attention, MLP, image update and mask head
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..config import DecoderConfig
from ..encoder import MLP
from ..errors import ShapeError
from ..tensor import LayerNorm, Module, Tensor, matmul, sigmoid_array
from .attention import Attention, MaskedCrossAttention

logger = logging.getLogger(__name__)


@dataclass
class DecoderState:
    """
    Tokens X_l ((N+1)×D, mask token last), flattened image features (P×D) and the
    binary attention mask M_l at feature resolution (None when masking is off)
    """

    tokens: Tensor
    image: Tensor
    attention_mask: Optional[np.ndarray]
    layer_index: int
    grid: Tuple[int, int]

    @property
    def mask_token(self) -> Tensor:
        return self.tokens[-1:]


class MaskHead(Module):
    """Bias-free MLP projecting the mask token before the per-pixel dot product"""

    def __init__(self, embed_dim: int, hidden_dim: int, rng: np.random.Generator):
        self.proj = MLP(embed_dim, hidden_dim, embed_dim, rng, bias=False)

    def forward(self, mask_token: Tensor, image: Tensor, grid: Tuple[int, int]) -> Tensor:
        return mask_head(self, mask_token, image, grid)


def mask_head(head: MaskHead, mask_token: Tensor, image: Tensor, grid: Tuple[int, int]) -> Tensor:
    """
    Logit of every cell = <MLP(mask token), image feature of the cell>

    Returns:
        h×w×1 logits at feature resolution
    """
    if mask_token.shape != (1, image.shape[-1]):
        raise ShapeError(f"mask head needs a 1×{image.shape[-1]} mask token, got {mask_token.shape}")
    if grid[0] * grid[1] != image.shape[0]:
        raise ShapeError(f"grid {grid} does not cover {image.shape[0]} image features")
    logits = matmul(image, head.proj(mask_token).T)
    return logits.reshape(grid[0], grid[1], 1)


class DecoderLayer(Module):
    def __init__(self, embed_dim: int, config: DecoderConfig, rng: np.random.Generator):
        self.threshold = config.threshold
        self.self_attn = Attention(embed_dim, config.attention_dim, config.num_heads, rng)
        self.norm1 = LayerNorm(embed_dim)
        self.cross_attn = MaskedCrossAttention(embed_dim, config.attention_dim, rng)
        self.norm2 = LayerNorm(embed_dim)
        self.mlp = MLP(embed_dim, config.mlp_dim, embed_dim, rng)
        self.norm3 = LayerNorm(embed_dim)
        self.image_attn = Attention(embed_dim, config.attention_dim, config.num_heads, rng)
        self.norm4 = LayerNorm(embed_dim)
        self.mask_head = MaskHead(embed_dim, config.mask_head_dim, rng)

    def forward(self, state: DecoderState, image_pe: Tensor) -> Tuple[DecoderState, Tensor]:
        return decoder_layer(self, state, image_pe)


def masked_cross_attention(layer: DecoderLayer, state: DecoderState, image_pe: Tensor) -> Tensor:
    """
    Token-to-image attention restricted to the current foreground estimate

    An all-background mask falls back to unmasked attention.
    """
    mask = state.attention_mask
    if mask is not None:
        if tuple(mask.shape) != state.grid:
            raise ShapeError(f"attention mask {mask.shape} does not match feature grid {state.grid}")
        if not mask.any():
            logger.debug("Decoder layer %d: empty mask, attending to every pixel", state.layer_index)
            mask = None
    return layer.cross_attn(state.tokens, state.image + image_pe, state.image, mask)


def decoder_layer(layer: DecoderLayer, state: DecoderState, image_pe: Tensor) -> Tuple[DecoderState, Tensor]:
    """
    Run one decoder layer

    Returns:
        (next state carrying the binarized mask M_l, this layer's h×w×1 mask logits)
    """
    tokens = state.tokens
    tokens = layer.norm1(tokens + layer.self_attn(tokens, tokens, tokens))
    tokens = layer.norm2(masked_cross_attention(layer, state, image_pe))
    tokens = layer.norm3(tokens + layer.mlp(tokens))
    image = layer.norm4(state.image + layer.image_attn(state.image + image_pe, tokens, tokens))
    logits = layer.mask_head(tokens[-1:], image, state.grid)
    next_mask = sigmoid_array(logits.data[..., 0]) >= layer.threshold
    next_state = DecoderState(
        tokens=tokens,
        image=image,
        attention_mask=next_mask if state.attention_mask is not None else None,
        layer_index=state.layer_index + 1,
        grid=state.grid,
    )
    return next_state, logits
