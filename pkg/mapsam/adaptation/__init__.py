"""
Adaptation Package
LoRA and DoRA weight adaptation for frozen linear layers
"""

from .dora import (
    AdaptationMode,
    AdaptedLinear,
    adapted_forward,
    column_norms,
    dora_merged,
    lora_merged,
    trainable_parameter_count,
)

__all__ = [
    'AdaptationMode',
    'AdaptedLinear',
    'adapted_forward',
    'column_norms',
    'dora_merged',
    'lora_merged',
    'trainable_parameter_count',
]
