"""
Mask Decoder Module
Stack of decoder layers refining the coarse mask into the final image-resolution logits
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..config import DecoderConfig
from ..errors import ShapeError
from ..prompt import CoarseMask, PromptTokens
from ..tensor import Module, Parameter, Tensor, concat, interpolate_bilinear, sigmoid_array
from .layer import DecoderLayer, DecoderState


@dataclass
class DecoderOutput:
    """Final logits (H×W×1) plus the refinement record M_0 … M_L"""

    logits: Tensor
    low_res_logits: Tensor
    layer_masks: List[np.ndarray]
    layer_logits: List[Tensor]


class MaskDecoder(Module):
    """Learned mask token plus `config.num_layers` decoder layers; fully trainable"""

    def __init__(self, embed_dim: int, config: DecoderConfig, rng: np.random.Generator):
        self.config = config
        self.embed_dim = embed_dim
        self.mask_token = Parameter(rng.normal(0.0, 1.0, size=(1, embed_dim)))
        self.layers = [DecoderLayer(embed_dim, config, rng) for _ in range(config.num_layers)]

    def forward(
        self,
        features: Tensor,
        prompts: PromptTokens,
        initial_mask: CoarseMask,
        image_size: int,
        image_pe: Optional[Tensor] = None,
        masked: bool = True,
    ) -> DecoderOutput:
        return decode(self, features, prompts, initial_mask, image_size, image_pe, masked)


def decode(
    decoder: MaskDecoder,
    features: Tensor,
    prompts: PromptTokens,
    initial_mask: CoarseMask,
    image_size: int,
    image_pe: Optional[Tensor] = None,
    masked: bool = True,
) -> DecoderOutput:
    """
    Refine the coarse mask through every decoder layer and upsample the last logits

    Args:
        decoder: Decoder weights
        features: Final-layer feature grid F (h×w×D)
        prompts: Point (or positional-semantic) tokens
        initial_mask: Coarse mask; its binarization is M_0
        image_size: Output side length
        image_pe: (h·w)×D positional encoding added to image keys; zeros when None
        masked: Apply masked attention in the token-to-image step

    Returns:
        DecoderOutput with H×W×1 logits
    """
    if features.ndim != 3 or features.shape[-1] != decoder.embed_dim:
        raise ShapeError(f"decoder expects h×w×{decoder.embed_dim} features, got {features.shape}")
    h, w, dim = features.shape
    if initial_mask.grid_shape != (h, w):
        raise ShapeError(f"initial mask grid {initial_mask.grid_shape} differs from features {(h, w)}")
    if image_pe is None:
        image_pe = Tensor(np.zeros((h * w, dim)))
    first_mask = initial_mask.binary
    state = DecoderState(
        tokens=concat([prompts.tokens, decoder.mask_token], axis=0),
        image=features.reshape(h * w, dim),
        attention_mask=first_mask if masked else None,
        layer_index=0,
        grid=(h, w),
    )
    layer_masks = [first_mask]
    layer_logits: List[Tensor] = []
    for layer in decoder.layers:
        state, logits = layer(state, image_pe)
        layer_logits.append(logits)
        layer_masks.append(sigmoid_array(logits.data[..., 0]) >= decoder.config.threshold)
    final = layer_logits[-1]
    return DecoderOutput(
        logits=interpolate_bilinear(final, image_size, image_size),
        low_res_logits=final,
        layer_masks=layer_masks,
        layer_logits=layer_logits,
    )
