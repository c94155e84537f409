"""
Tests for the checkpoint container and model restoration
"""

import struct

import numpy as np
import pytest

from mapsam.checkpoint import (
    CHECKPOINT_VERSION,
    MAGIC,
    build_checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    restore_model,
    save_checkpoint,
)
from mapsam.errors import CheckpointError
from mapsam.model import MapSAM
from mapsam.training import AdamW, ReconstructionHead


@pytest.fixture
def finetuned(tiny_config):
    model = MapSAM(tiny_config, np.random.default_rng(0))
    model.prepare_finetune(np.random.default_rng(1))
    for layer in model.encoder.adapted_layers():
        layer.lora_b.data[...] = np.random.default_rng(2).normal(size=layer.lora_b.shape)
    return model


class TestContainer:
    def test_save_load_save_is_byte_identical(self, finetuned, tmp_path):
        named = [(n, p) for n, p in finetuned.named_parameters() if p.requires_grad]
        optimizer = AdamW(named)
        for _, p in named:
            p.grad = np.ones_like(p.data)
        optimizer.step(1e-3)
        rng_state = np.random.default_rng(5).bit_generator.state
        first = tmp_path / "a.ckpt"
        second = tmp_path / "b.ckpt"
        save_checkpoint(str(first), build_checkpoint(finetuned, "finetune", 3, 12, rng_state, optimizer))
        save_checkpoint(str(second), load_checkpoint(str(first)))
        assert first.read_bytes() == second.read_bytes()

    def test_metadata_survives(self, finetuned):
        checkpoint = decode_checkpoint(encode_checkpoint(build_checkpoint(finetuned, "finetune", 2, 8)))
        assert checkpoint.stage == "finetune"
        assert checkpoint.meta["epoch"] == 2 and checkpoint.meta["iteration"] == 8
        assert checkpoint.meta["adapter_mode"] == "dora"
        assert checkpoint.optimizer_state == {}

    def test_reconstruction_head_kept_apart_from_the_model(self, tiny_config):
        model = MapSAM(tiny_config, np.random.default_rng(0))
        head = ReconstructionHead(32, 4, np.random.default_rng(3))
        checkpoint = decode_checkpoint(encode_checkpoint(build_checkpoint(model, "pretrain", head=head)))
        expected = head.state_dict()
        assert set(checkpoint.head_state) == set(expected)
        assert all(np.array_equal(checkpoint.head_state[k], expected[k]) for k in expected)
        assert set(checkpoint.model_state) == set(model.state_dict())
        restored, _ = restore_model(checkpoint)
        assert set(restored.state_dict()) == set(model.state_dict())

    def test_preamble(self, finetuned):
        payload = encode_checkpoint(build_checkpoint(finetuned, "finetune"))
        magic, version, _ = struct.unpack_from("<4sII", payload)
        assert magic == MAGIC and version == CHECKPOINT_VERSION

    def test_version_mismatch_fails(self, finetuned):
        payload = bytearray(encode_checkpoint(build_checkpoint(finetuned, "finetune")))
        struct.pack_into("<I", payload, 4, CHECKPOINT_VERSION + 1)
        with pytest.raises(CheckpointError):
            decode_checkpoint(bytes(payload))

    def test_config_version_mismatch_fails(self, finetuned):
        checkpoint = build_checkpoint(finetuned, "finetune")
        checkpoint.config["version"] = 99
        with pytest.raises(CheckpointError):
            decode_checkpoint(encode_checkpoint(checkpoint))

    def test_bad_magic_and_truncation(self, finetuned):
        payload = encode_checkpoint(build_checkpoint(finetuned, "finetune"))
        with pytest.raises(CheckpointError):
            decode_checkpoint(b"XXXX" + payload[4:])
        with pytest.raises(CheckpointError):
            decode_checkpoint(payload[:-8])
        with pytest.raises(CheckpointError):
            decode_checkpoint(payload[:6])

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(str(tmp_path / "none.ckpt"))


class TestRestore:
    def test_restored_model_reproduces_forward(self, finetuned):
        image = np.random.default_rng(3).uniform(size=(16, 16, 3))
        expected = finetuned(image).final_logits.data
        model, config = restore_model(decode_checkpoint(encode_checkpoint(build_checkpoint(finetuned, "finetune"))))
        assert config == finetuned.config
        np.testing.assert_array_equal(model(image).final_logits.data, expected)

    def test_mismatched_model_fails(self, finetuned, tiny_config):
        checkpoint = build_checkpoint(finetuned, "finetune")
        other = tiny_config.with_overrides({"decoder.num_layers": 3})
        with pytest.raises(CheckpointError):
            restore_model(checkpoint, other)
