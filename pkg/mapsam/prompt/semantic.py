"""
Semantic Prompt Module
Target embedding pooled under the coarse mask and its fusion into the point tokens
"""

import logging

import numpy as np

from ..errors import ShapeError
from ..tensor import Tensor
from .types import CoarseMask, PromptTokens, TargetEmbedding

logger = logging.getLogger(__name__)


def target_embedding(features: Tensor, mask: CoarseMask) -> TargetEmbedding:
    """
    T = mean of the feature vectors of F where the coarse mask is foreground

    An empty mask gives the zero vector with support_size 0.
    """
    if features.ndim != 3 or features.shape[:2] != mask.grid_shape:
        raise ShapeError(f"features {features.shape} and mask grid {mask.grid_shape} do not align")
    rows, cols = np.nonzero(mask.binary)
    support = int(rows.size)
    if support == 0:
        logger.warning("Coarse mask is empty; using a zero target embedding")
        return TargetEmbedding(vector=Tensor(np.zeros((1, features.shape[-1]))), support_size=0)
    gathered = features[rows, cols]
    return TargetEmbedding(vector=gathered.mean(axis=0, keepdims=True), support_size=support)


def positional_semantic_tokens(prompts: PromptTokens, target: TargetEmbedding) -> PromptTokens:
    """Add T element-wise to every point token"""
    if target.vector.shape != (1, prompts.tokens.shape[-1]):
        raise ShapeError(
            f"target embedding {target.vector.shape} does not match tokens {prompts.tokens.shape}"
        )
    return PromptTokens(
        tokens=prompts.tokens + target.vector,
        point_coords=list(prompts.point_coords),
        labels=list(prompts.labels),
    )
