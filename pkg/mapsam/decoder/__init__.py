"""
Decoder Package
Masked-attention mask decoder with per-layer mask refinement
"""

from .attention import Attention, MaskedCrossAttention, additive_mask
from .decoder import DecoderOutput, MaskDecoder, decode
from .layer import DecoderLayer, DecoderState, MaskHead, decoder_layer, mask_head, masked_cross_attention

__all__ = [
    'Attention',
    'MaskedCrossAttention',
    'additive_mask',
    'DecoderOutput',
    'MaskDecoder',
    'decode',
    'DecoderLayer',
    'DecoderState',
    'MaskHead',
    'decoder_layer',
    'mask_head',
    'masked_cross_attention',
]
