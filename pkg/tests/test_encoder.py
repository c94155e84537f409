"""
Tests for the miniature ViT encoder
"""

import numpy as np
import pytest

from mapsam.adaptation import AdaptationMode
from mapsam.config import EncoderConfig
from mapsam.encoder import EncoderBlock, ImageEncoder, MultiHeadAttention, PatchEmbedding, image_to_array, patchify, unfold_patches
from mapsam.errors import ShapeError
from mapsam.tensor import Tensor
from mapsam.tensor.gradcheck import gradient_check


@pytest.fixture
def encoder_config():
    return EncoderConfig(image_size=16, patch_size=4, embed_dim=16, num_layers=2, num_heads=2, mlp_ratio=2, feature_tap_layers=[1, 2])


class TestPatches:
    def test_unfold_order(self, rng):
        image = rng.uniform(size=(8, 8, 3))
        patches = unfold_patches(image, 4)
        assert patches.shape == (4, 48)
        np.testing.assert_array_equal(patches[0], image[:4, :4].reshape(-1))
        np.testing.assert_array_equal(patches[1], image[:4, 4:].reshape(-1))
        np.testing.assert_array_equal(patches[2], image[4:, :4].reshape(-1))

    def test_image_to_array_scale(self):
        raster = np.full((2, 2, 3), 255, dtype=np.uint8)
        np.testing.assert_array_equal(image_to_array(raster), np.ones((2, 2, 3)))

    def test_wrong_image_shape(self, encoder_config, rng):
        encoder = ImageEncoder(encoder_config, rng)
        with pytest.raises(ShapeError):
            encoder.encode(np.zeros((12, 12, 3)))

    def test_patchify_matches_unfold_and_matmul(self, encoder_config, rng):
        embedding = PatchEmbedding(encoder_config, rng)
        image = rng.uniform(size=(16, 16, 3))
        rows = []
        for gr in range(4):
            for gc in range(4):
                rows.append(image[gr * 4:(gr + 1) * 4, gc * 4:(gc + 1) * 4].reshape(-1))
        expected = np.stack(rows) @ embedding.proj.weight.data.T + embedding.proj.bias.data + embedding.pos_embed.data
        np.testing.assert_allclose(patchify(embedding, image).data, expected, atol=1e-12)


def _numpy_linear(linear, x):
    return x @ linear.weight.data.T + linear.bias.data


class TestSelfAttention:
    def test_zero_query_gives_uniform_weights_over_values(self, rng):
        attn = MultiHeadAttention(16, 2, rng)
        attn.q_proj.weight.data[...] = 0.0
        attn.q_proj.bias.data[...] = 0.0
        x = rng.normal(size=(6, 16))
        weights = attn.attention_weights(Tensor(x)).data
        np.testing.assert_allclose(weights, np.full((2, 6, 6), 1.0 / 6.0), atol=1e-15)
        mean_v = _numpy_linear(attn.v_proj, x).mean(axis=0, keepdims=True)
        expected = np.repeat(_numpy_linear(attn.out_proj, mean_v), 6, axis=0)
        np.testing.assert_allclose(attn(Tensor(x)).data, expected, atol=1e-12)

    def test_single_token_attends_to_itself(self, rng):
        attn = MultiHeadAttention(16, 2, rng)
        x = rng.normal(size=(1, 16))
        np.testing.assert_array_equal(attn.attention_weights(Tensor(x)).data, np.ones((2, 1, 1)))
        expected = _numpy_linear(attn.out_proj, _numpy_linear(attn.v_proj, x))
        np.testing.assert_allclose(attn(Tensor(x)).data, expected, atol=1e-12)

    def test_forward_leaves_no_state_on_the_module(self, rng):
        attn = MultiHeadAttention(16, 2, rng)
        before = set(vars(attn))
        attn(Tensor(rng.normal(size=(5, 16))))
        assert set(vars(attn)) == before


class TestEncoder:
    def test_tap_grids(self, encoder_config, rng):
        encoder = ImageEncoder(encoder_config, rng)
        features = encoder.encode(rng.uniform(size=(16, 16, 3)))
        assert sorted(features.taps) == [1, 2]
        assert features.final is features.taps[2]
        assert features.final.shape == (4, 4, 16)
        assert features.grid_shape == (4, 4)

    def test_deterministic(self, encoder_config):
        image = np.random.default_rng(5).uniform(size=(16, 16, 3))
        a = ImageEncoder(encoder_config, np.random.default_rng(1)).encode(image)
        b = ImageEncoder(encoder_config, np.random.default_rng(1)).encode(image)
        np.testing.assert_array_equal(a.final.data, b.final.data)

    def test_block_preserves_shape_and_gradients(self, encoder_config, rng):
        block = EncoderBlock(encoder_config, rng)
        x = Tensor(rng.normal(size=(5, 16)), requires_grad=True)
        assert block(x).shape == (5, 16)
        w = rng.normal(size=(5, 16))
        assert gradient_check(lambda: (block(x) * w).sum(), [x]) < 1e-4

    @pytest.mark.parametrize("mode", [AdaptationMode.LORA, AdaptationMode.DORA])
    def test_adaptation_freezes_base_and_keeps_output(self, encoder_config, rng, mode):
        encoder = ImageEncoder(encoder_config, rng)
        image = rng.uniform(size=(16, 16, 3))
        before = encoder.encode(image).final.data.copy()
        encoder.enable_adaptation(mode, 2, np.random.default_rng(3))
        assert encoder.adaptation_mode == mode
        assert np.abs(encoder.encode(image).final.data - before).max() < 1e-12
        for name, p in encoder.named_parameters():
            leaf = name.rsplit(".", 1)[-1]
            assert p.requires_grad == (leaf in ("lora_a", "lora_b", "magnitude")), name
        assert len(encoder.adapted_layers()) == 2 * encoder_config.num_layers
