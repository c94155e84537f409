"""
Prompt Package
Automatic positional-semantic prompting: coarse mask, point prompts and target embedding
"""

from .generator import AutoPromptGenerator, CoarseHead, coarse_head, fuse_layers, select_points
from .prompt_encoder import PromptEncoder, embed_points
from .semantic import positional_semantic_tokens, target_embedding
from .types import CoarseMask, Point, PointLabel, PromptTokens, TargetEmbedding

__all__ = [
    'AutoPromptGenerator',
    'CoarseHead',
    'coarse_head',
    'fuse_layers',
    'select_points',
    'PromptEncoder',
    'embed_points',
    'positional_semantic_tokens',
    'target_embedding',
    'CoarseMask',
    'Point',
    'PointLabel',
    'PromptTokens',
    'TargetEmbedding',
]
