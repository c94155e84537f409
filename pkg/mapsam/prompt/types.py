"""
Prompt Types Module
Data carried between the auto-prompt generator, the prompt encoder and the decoder
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Tuple

import numpy as np

from ..tensor import Tensor, sigmoid_array

Point = Tuple[int, int]  # (row, col) in input-image pixels


class PointLabel(IntEnum):
    """Index into the prompt encoder's label embeddings"""
    NEGATIVE = 0
    POSITIVE = 1


@dataclass
class CoarseMask:
    """Fused low-resolution foreground estimate M at feature resolution"""

    logits: Tensor  # h×w×1
    threshold: float = 0.5

    @property
    def probabilities(self) -> np.ndarray:
        """h×w sigmoid of the logits"""
        return sigmoid_array(self.logits.data[..., 0])

    @property
    def binary(self) -> np.ndarray:
        """h×w boolean mask, probability >= threshold"""
        return self.probabilities >= self.threshold

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return self.logits.shape[0], self.logits.shape[1]


@dataclass
class PromptTokens:
    """Point prompt tokens (N_tokens×embed_dim) with their pixel positions and labels"""

    tokens: Tensor
    point_coords: List[Point]
    labels: List[PointLabel] = field(default_factory=lambda: [PointLabel.POSITIVE, PointLabel.NEGATIVE])


@dataclass
class TargetEmbedding:
    """Pooled target feature T (1×embed_dim) and the number of cells it averages"""

    vector: Tensor
    support_size: int
