"""
Prompt Encoder Module
Random-Fourier positional encoding of point prompts plus learned label embeddings
"""

import math
from typing import Sequence

import numpy as np

from ..errors import PromptError
from ..tensor import Module, Parameter, Tensor, concat
from .types import Point, PointLabel, PromptTokens


class PromptEncoder(Module):
    """
    Encodes labeled points as embed_dim tokens

    The Gaussian Fourier matrix is drawn once from `fourier_seed` and never trains.
    """

    def __init__(self, embed_dim: int, rng: np.random.Generator, fourier_seed: int, fourier_scale: float = 1.0):
        self.embed_dim = embed_dim
        self.fourier_seed = fourier_seed
        gaussian = np.random.default_rng(fourier_seed).normal(0.0, fourier_scale, size=(2, embed_dim // 2))
        self.fourier_matrix = Parameter(gaussian, requires_grad=False)
        self.label_embed = Parameter(rng.normal(0.0, 1.0, size=(len(PointLabel), embed_dim)))

    def encode_coords(self, coords: np.ndarray) -> np.ndarray:
        """
        Fourier features of normalized (row, col) coordinates in [0, 1]

        Args:
            coords: N×2 array

        Returns:
            N×embed_dim array [sin | cos]
        """
        projected = (2.0 * coords - 1.0) @ self.fourier_matrix.data
        projected = 2.0 * math.pi * projected
        return np.concatenate([np.sin(projected), np.cos(projected)], axis=-1)

    def dense_positional_encoding(self, grid_h: int, grid_w: int) -> Tensor:
        """Positional encoding of every feature-grid cell centre, (h·w)×embed_dim, constant"""
        rows, cols = np.meshgrid(
            (np.arange(grid_h) + 0.5) / grid_h, (np.arange(grid_w) + 0.5) / grid_w, indexing="ij"
        )
        coords = np.stack([rows.reshape(-1), cols.reshape(-1)], axis=-1)
        return Tensor(self.encode_coords(coords))

    def forward(self, points: Sequence[Point], labels: Sequence[PointLabel], image_size: int) -> PromptTokens:
        return embed_points(self, points, labels, image_size)


def embed_points(encoder: PromptEncoder, points: Sequence[Point], labels: Sequence[PointLabel], image_size: int) -> PromptTokens:
    """
    Token = Fourier encoding of the normalized pixel centre + the label's embedding

    Raises:
        PromptError: for points outside the image or a points/labels length mismatch
    """
    if len(points) != len(labels):
        raise PromptError(f"{len(points)} points but {len(labels)} labels")
    for row, col in points:
        if not (0 <= row < image_size and 0 <= col < image_size):
            raise PromptError(f"point ({row}, {col}) lies outside a {image_size}×{image_size} image")
    coords = (np.asarray(points, dtype=np.float64) + 0.5) / image_size
    positional = Tensor(encoder.encode_coords(coords))
    label_rows = [encoder.label_embed[int(label): int(label) + 1] for label in labels]
    tokens = positional + concat(label_rows, axis=0)
    return PromptTokens(tokens=tokens, point_coords=[tuple(p) for p in points], labels=[PointLabel(l) for l in labels])
