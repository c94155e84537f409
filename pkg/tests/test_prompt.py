"""
Tests for the auto-prompt generator, prompt encoder and semantic prompt
"""

import logging

import numpy as np
import pytest

from mapsam.errors import PromptError, ShapeError
from mapsam.prompt import (
    CoarseHead,
    CoarseMask,
    PointLabel,
    PromptEncoder,
    coarse_head,
    embed_points,
    fuse_layers,
    positional_semantic_tokens,
    select_points,
    target_embedding,
)
from mapsam.tensor import Tensor, bilinear_matrix, sigmoid_array


def _scan_extrema(logits: np.ndarray, image_size: int):
    """Full-scan oracle: first maximum and first minimum of the upsampled probabilities"""
    probs = sigmoid_array(logits)
    up = bilinear_matrix(logits.shape[0], image_size) @ probs @ bilinear_matrix(logits.shape[1], image_size).T
    best, worst = up.max(), up.min()
    positive = negative = None
    for r in range(image_size):
        for c in range(image_size):
            if positive is None and up[r, c] >= best - 1e-12:
                positive = (r, c)
            if negative is None and up[r, c] <= worst + 1e-12:
                negative = (r, c)
    return positive, negative


class TestCoarseHead:
    def test_output_shape(self, rng):
        head = CoarseHead(32, rng)
        out = coarse_head(head, Tensor(rng.normal(size=(4, 4, 32))))
        assert out.shape == (4, 4, 1)

    def test_zero_input_gives_zero_logits(self, rng):
        head = CoarseHead(32, rng)
        out = coarse_head(head, Tensor(np.zeros((3, 3, 32))))
        np.testing.assert_allclose(out.data, np.zeros((3, 3, 1)), atol=1e-12)

    def test_channel_mismatch(self, rng):
        with pytest.raises(ShapeError):
            coarse_head(CoarseHead(32, rng), Tensor(np.zeros((2, 2, 16))))


class TestFuseLayers:
    def test_average_in_logit_space(self, rng):
        a, b = rng.normal(size=(3, 3, 1)), rng.normal(size=(3, 3, 1))
        fused = fuse_layers([Tensor(a), Tensor(b)])
        np.testing.assert_allclose(fused.logits.data, (a + b) / 2.0, atol=1e-12)
        np.testing.assert_array_equal(fused.binary, sigmoid_array((a + b)[..., 0] / 2.0) >= 0.5)

    def test_single_layer_is_identity(self, rng):
        a = rng.normal(size=(2, 2, 1))
        np.testing.assert_array_equal(fuse_layers([Tensor(a)]).logits.data, a)

    def test_tap_order_does_not_change_the_fused_mask(self, rng):
        layers = [Tensor(rng.normal(0.0, 2.0, size=(4, 4, 1))) for _ in range(4)]
        forward = fuse_layers(layers)
        for order in ([3, 2, 1, 0], [2, 0, 3, 1]):
            permuted = fuse_layers([layers[i] for i in order])
            np.testing.assert_allclose(permuted.logits.data, forward.logits.data, atol=1e-12)
            np.testing.assert_array_equal(permuted.binary, forward.binary)

    def test_empty_and_mismatched(self):
        with pytest.raises(ShapeError):
            fuse_layers([])
        with pytest.raises(ShapeError):
            fuse_layers([Tensor(np.zeros((2, 2, 1))), Tensor(np.zeros((3, 3, 1)))])


class TestSelectPoints:
    def test_matches_full_scan_on_random_maps(self):
        gen = np.random.default_rng(11)
        for _ in range(1000):
            h = int(gen.integers(2, 7))
            w = int(gen.integers(2, 7))
            image_size = int(gen.choice([8, 16, 32]))
            logits = gen.normal(0.0, 3.0, size=(h, w))
            mask = CoarseMask(Tensor(logits[..., None]))
            assert select_points(mask, image_size) == _scan_extrema(logits, image_size)

    def test_constant_map_falls_on_origin(self, caplog):
        mask = CoarseMask(Tensor(np.zeros((4, 4, 1))))
        with caplog.at_level(logging.WARNING):
            assert select_points(mask, 16) == ((0, 0), (0, 0))
        assert "constant" in caplog.text

    def test_points_lie_on_extreme_cells(self):
        logits = np.full((4, 4), -2.0)
        logits[2, 3] = 5.0
        logits[0, 1] = -9.0
        positive, negative = select_points(CoarseMask(Tensor(logits[..., None])), 16)
        assert positive[0] // 4 == 2 and positive[1] // 4 == 3
        assert negative[0] // 4 == 0 and negative[1] // 4 == 1


class TestPromptEncoder:
    def test_token_shape(self, rng):
        encoder = PromptEncoder(32, rng, fourier_seed=1)
        prompts = embed_points(encoder, [(3, 4), (10, 1)], [PointLabel.POSITIVE, PointLabel.NEGATIVE], 16)
        assert prompts.tokens.shape == (2, 32)
        assert prompts.point_coords == [(3, 4), (10, 1)]

    def test_label_embedding_separates_tokens(self, rng):
        encoder = PromptEncoder(32, rng, fourier_seed=1)
        pos = embed_points(encoder, [(5, 5)], [PointLabel.POSITIVE], 16).tokens.data
        neg = embed_points(encoder, [(5, 5)], [PointLabel.NEGATIVE], 16).tokens.data
        expected = encoder.label_embed.data[PointLabel.POSITIVE] - encoder.label_embed.data[PointLabel.NEGATIVE]
        np.testing.assert_allclose(pos[0] - neg[0], expected, atol=1e-12)

    def test_fourier_matrix_is_frozen_and_seeded(self, rng):
        a = PromptEncoder(32, rng, fourier_seed=9)
        b = PromptEncoder(32, np.random.default_rng(99), fourier_seed=9)
        assert not a.fourier_matrix.requires_grad
        np.testing.assert_array_equal(a.fourier_matrix.data, b.fourier_matrix.data)

    def test_invalid_points(self, rng):
        encoder = PromptEncoder(32, rng, fourier_seed=1)
        with pytest.raises(PromptError):
            embed_points(encoder, [(16, 0)], [PointLabel.POSITIVE], 16)
        with pytest.raises(PromptError):
            embed_points(encoder, [(-1, 0)], [PointLabel.POSITIVE], 16)
        with pytest.raises(PromptError):
            embed_points(encoder, [(1, 1), (2, 2)], [PointLabel.POSITIVE], 16)

    def test_distinct_point_pairs_encode_distinctly(self, rng):
        encoder = PromptEncoder(32, rng, fourier_seed=1)
        gen = np.random.default_rng(21)
        pairs = set()
        while len(pairs) < 1000:
            pos, neg = gen.integers(0, 64, size=2), gen.integers(0, 64, size=2)
            pairs.add(((int(pos[0]), int(pos[1])), (int(neg[0]), int(neg[1]))))
        labels = [PointLabel.POSITIVE, PointLabel.NEGATIVE]
        encodings = np.stack([embed_points(encoder, list(pair), labels, 64).tokens.data.reshape(-1) for pair in sorted(pairs)])
        squared = (encodings * encodings).sum(axis=1)
        distances = squared[:, None] + squared[None, :] - 2.0 * encodings @ encodings.T
        np.fill_diagonal(distances, np.inf)
        assert distances.min() > 1e-8

    def test_dense_encoding(self, rng):
        pe = PromptEncoder(32, rng, fourier_seed=1).dense_positional_encoding(4, 3)
        assert pe.shape == (12, 32)
        assert np.abs(pe.data).max() <= 1.0


class TestSemanticPrompt:
    def test_matches_brute_force_mean(self, rng):
        features = Tensor(rng.normal(size=(4, 4, 8)))
        logits = rng.normal(size=(4, 4, 1))
        mask = CoarseMask(Tensor(logits))
        result = target_embedding(features, mask)
        cells = [features.data[r, c] for r in range(4) for c in range(4) if mask.binary[r, c]]
        assert result.support_size == len(cells)
        np.testing.assert_allclose(result.vector.data[0], np.mean(cells, axis=0), atol=1e-12)

    def test_empty_mask_gives_zero_vector(self, rng, caplog):
        mask = CoarseMask(Tensor(np.full((3, 3, 1), -10.0)))
        with caplog.at_level(logging.WARNING):
            result = target_embedding(Tensor(rng.normal(size=(3, 3, 8))), mask)
        assert result.support_size == 0
        np.testing.assert_array_equal(result.vector.data, np.zeros((1, 8)))
        assert "empty" in caplog.text

    def test_gradient_reaches_foreground_features_only(self, rng):
        features = Tensor(rng.normal(size=(2, 2, 4)), requires_grad=True)
        logits = np.array([[5.0, -5.0], [-5.0, 5.0]])[..., None]
        target_embedding(features, CoarseMask(Tensor(logits))).vector.sum().backward()
        np.testing.assert_allclose(features.grad[0, 0], np.full(4, 0.5))
        np.testing.assert_array_equal(features.grad[0, 1], np.zeros(4))

    def test_tokens_shift_by_target(self, rng):
        encoder = PromptEncoder(8, rng, fourier_seed=1)
        prompts = embed_points(encoder, [(1, 1), (2, 2)], [PointLabel.POSITIVE, PointLabel.NEGATIVE], 4)
        features = Tensor(rng.normal(size=(2, 2, 8)))
        target = target_embedding(features, CoarseMask(Tensor(np.ones((2, 2, 1)))))
        fused = positional_semantic_tokens(prompts, target)
        np.testing.assert_allclose(fused.tokens.data, prompts.tokens.data + target.vector.data, atol=1e-12)

    def test_dimension_mismatch(self, rng):
        encoder = PromptEncoder(8, rng, fourier_seed=1)
        prompts = embed_points(encoder, [(1, 1)], [PointLabel.POSITIVE], 4)
        target = target_embedding(Tensor(rng.normal(size=(2, 2, 16))), CoarseMask(Tensor(np.ones((2, 2, 1)))))
        with pytest.raises(ShapeError):
            positional_semantic_tokens(prompts, target)
