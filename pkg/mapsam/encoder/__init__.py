"""
Encoder Package
Miniature ViT image encoder with DoRA-injected query/value projections
"""

from ..config import EncoderConfig
from .vit import (
    EncoderBlock,
    ImageEncoder,
    LayerFeatures,
    MLP,
    MultiHeadAttention,
    PatchEmbedding,
    attention_block,
    image_to_array,
    patchify,
    unfold_patches,
)

__all__ = [
    'EncoderConfig',
    'EncoderBlock',
    'ImageEncoder',
    'LayerFeatures',
    'MLP',
    'MultiHeadAttention',
    'PatchEmbedding',
    'attention_block',
    'image_to_array',
    'patchify',
    'unfold_patches',
]
