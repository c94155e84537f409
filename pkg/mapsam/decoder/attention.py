"""
Decoder Attention Module
Downsampled multi-head attention and the single-head token-to-image masked attention
"""

import logging
import math
from typing import Optional

import numpy as np

from ..errors import ShapeError
from ..tensor import Linear, Module, Tensor, matmul, softmax

logger = logging.getLogger(__name__)


class Attention(Module):
    """
    Multi-head attention whose queries/keys/values are projected down to `internal_dim`

    Used for token self-attention and for the unmasked image-to-token direction.
    """

    def __init__(self, embed_dim: int, internal_dim: int, num_heads: int, rng: np.random.Generator):
        if internal_dim % num_heads != 0:
            raise ShapeError(f"internal_dim {internal_dim} is not divisible by {num_heads} heads")
        self.num_heads = num_heads
        self.head_dim = internal_dim // num_heads
        self.q_proj = Linear(embed_dim, internal_dim, rng)
        self.k_proj = Linear(embed_dim, internal_dim, rng)
        self.v_proj = Linear(embed_dim, internal_dim, rng)
        self.out_proj = Linear(internal_dim, embed_dim, rng)

    def _split_heads(self, x: Tensor) -> Tensor:
        return x.reshape(x.shape[0], self.num_heads, self.head_dim).transpose(1, 0, 2)

    def forward(self, q: Tensor, k: Tensor, v: Tensor) -> Tensor:
        if k.shape != v.shape or q.shape[-1] != k.shape[-1]:
            raise ShapeError(f"attention inputs disagree: q {q.shape}, k {k.shape}, v {v.shape}")
        queries = q.shape[0]
        qh = self._split_heads(self.q_proj(q))
        kh = self._split_heads(self.k_proj(k))
        vh = self._split_heads(self.v_proj(v))
        weights = softmax(matmul(qh, kh.transpose(0, 2, 1)) * (1.0 / math.sqrt(self.head_dim)), axis=-1)
        out = matmul(weights, vh).transpose(1, 0, 2).reshape(queries, self.num_heads * self.head_dim)
        return self.out_proj(out)


def additive_mask(mask: np.ndarray) -> np.ndarray:
    """Binary grid -> flat additive mask: 0 on foreground cells, −∞ elsewhere"""
    return np.where(np.asarray(mask, dtype=bool).reshape(-1), 0.0, -np.inf)


class MaskedCrossAttention(Module):
    """
    Token-to-image attention X_l = softmax(M_{l−1} + Q Kᵀ/√d) V + X_{l−1}

    f_Q and f_K project to `attention_dim`; f_V keeps embed_dim so the residual adds directly.
    """

    def __init__(self, embed_dim: int, attention_dim: int, rng: np.random.Generator):
        self.attention_dim = attention_dim
        self.f_q = Linear(embed_dim, attention_dim, rng)
        self.f_k = Linear(embed_dim, attention_dim, rng)
        self.f_v = Linear(embed_dim, embed_dim, rng)

    def attention_weights(self, tokens: Tensor, keys: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
        """N×P weights; cells outside the mask get exactly 0"""
        logits = matmul(self.f_q(tokens), self.f_k(keys).T) * (1.0 / math.sqrt(self.attention_dim))
        if mask is not None:
            if np.asarray(mask).size != keys.shape[0]:
                raise ShapeError(f"attention mask of {np.asarray(mask).size} cells for {keys.shape[0]} image features")
            logits = logits + additive_mask(mask)
        return softmax(logits, axis=-1)

    def forward(self, tokens: Tensor, keys: Tensor, values: Tensor, mask: Optional[np.ndarray] = None) -> Tensor:
        """
        Args:
            tokens: N×D queries (also the residual)
            keys: P×D image features with positional encoding
            values: P×D image features
            mask: Binary feature grid with P cells, or None for plain attention

        Returns:
            Updated N×D tokens
        """
        if keys.shape != values.shape or tokens.shape[-1] != keys.shape[-1]:
            raise ShapeError(f"cross-attention inputs disagree: tokens {tokens.shape}, keys {keys.shape}")
        weights = self.attention_weights(tokens, keys, mask)
        return tokens + matmul(weights, self.f_v(values))
