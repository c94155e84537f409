"""
Checkpoint Module
Versioned `MSAM` container: JSON header (config, tensor manifest, run metadata) plus f64 LE blobs
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .config import CONFIG_VERSION, RunConfig
from .errors import CheckpointError, ConfigError, ShapeError
from .model import MapSAM

logger = logging.getLogger(__name__)

MAGIC = b"MSAM"
CHECKPOINT_VERSION = 1
OPTIM_PREFIX = "optim."
HEAD_PREFIX = "recon_head."
_PREAMBLE = struct.Struct("<4sII")


@dataclass
class Checkpoint:
    """
    Everything needed to rebuild and resume a run

    `tensors` keeps insertion order; that order is the on-disk order.
    """

    config: Dict[str, Any]
    tensors: Dict[str, np.ndarray]
    meta: Dict[str, Any] = field(default_factory=dict)
    version: int = CHECKPOINT_VERSION

    @property
    def stage(self) -> str:
        return self.meta.get("stage", "init")

    @property
    def model_state(self) -> Dict[str, np.ndarray]:
        return {k: v for k, v in self.tensors.items() if not k.startswith((OPTIM_PREFIX, HEAD_PREFIX))}

    @property
    def head_state(self) -> Dict[str, np.ndarray]:
        """Pretraining reconstruction head; empty for finetune checkpoints"""
        return {k[len(HEAD_PREFIX):]: v for k, v in self.tensors.items() if k.startswith(HEAD_PREFIX)}

    @property
    def optimizer_state(self) -> Dict[str, np.ndarray]:
        return {k[len(OPTIM_PREFIX):]: v for k, v in self.tensors.items() if k.startswith(OPTIM_PREFIX)}

    def run_config(self) -> RunConfig:
        try:
            return RunConfig.from_dict(self.config)
        except ConfigError as e:
            raise CheckpointError(f"checkpoint carries an unusable config: {e}") from e


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    manifest = []
    blobs = []
    offset = 0
    for name, array in checkpoint.tensors.items():
        data = np.ascontiguousarray(array, dtype="<f8").tobytes()
        manifest.append({"name": name, "shape": list(np.shape(array)), "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    header = json.dumps(
        {"config": checkpoint.config, "meta": checkpoint.meta, "tensors": manifest},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return _PREAMBLE.pack(MAGIC, checkpoint.version, len(header)) + header + b"".join(blobs)


def decode_checkpoint(payload: bytes) -> Checkpoint:
    """
    Raises:
        CheckpointError: on a bad magic, an unsupported version or a truncated file
    """
    if len(payload) < _PREAMBLE.size:
        raise CheckpointError("checkpoint is truncated")
    magic, version, header_len = _PREAMBLE.unpack_from(payload)
    if magic != MAGIC:
        raise CheckpointError(f"not a MapSAM checkpoint (magic {magic!r})")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})")
    start = _PREAMBLE.size
    try:
        header = json.loads(payload[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"checkpoint header is corrupt: {e}") from e
    config = header.get("config", {})
    if config.get("version") != CONFIG_VERSION:
        raise CheckpointError(
            f"checkpoint was written with config version {config.get('version')}, expected {CONFIG_VERSION}"
        )
    body = payload[start + header_len:]
    tensors: Dict[str, np.ndarray] = {}
    for item in header.get("tensors", []):
        end = item["offset"] + item["nbytes"]
        if end > len(body):
            raise CheckpointError(f"checkpoint is truncated inside tensor '{item['name']}'")
        values = np.frombuffer(body[item["offset"]:end], dtype="<f8").astype(np.float64)
        tensors[item["name"]] = values.reshape(item["shape"])
    return Checkpoint(config=config, tensors=tensors, meta=header.get("meta", {}), version=version)


def save_checkpoint(path: str, checkpoint: Checkpoint):
    try:
        with open(path, "wb") as f:
            f.write(encode_checkpoint(checkpoint))
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {e}") from e
    logger.debug("Saved checkpoint %s (%d tensors)", path, len(checkpoint.tensors))


def load_checkpoint(path: str) -> Checkpoint:
    try:
        with open(path, "rb") as f:
            payload = f.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    return decode_checkpoint(payload)


def build_checkpoint(
    model: MapSAM,
    stage: str,
    epoch: int = 0,
    iteration: int = 0,
    rng_state: Optional[Dict[str, Any]] = None,
    optimizer=None,
    head=None,
) -> Checkpoint:
    """Snapshot model parameters, optimizer moments and run counters (plus the pretrain head, if given)"""
    tensors = model.state_dict()
    if head is not None:
        for name, array in head.state_dict().items():
            tensors[HEAD_PREFIX + name] = array
    step_count = 0
    if optimizer is not None:
        for name, array in optimizer.state_dict().items():
            tensors[OPTIM_PREFIX + name] = array
        step_count = optimizer.step_count
    meta = {
        "stage": stage,
        "epoch": epoch,
        "iteration": iteration,
        "seed": model.config.training.seed,
        "rng_state": rng_state,
        "adapter_mode": model.encoder.adaptation_mode.value,
        "optimizer_steps": step_count,
    }
    return Checkpoint(config=model.config.snapshot(), tensors=tensors, meta=meta)


def restore_model(checkpoint: Checkpoint, config: Optional[RunConfig] = None) -> Tuple[MapSAM, RunConfig]:
    """
    Rebuild a model from a checkpoint, optionally under a different (compatible) run config

    Raises:
        CheckpointError: if the stored parameters do not fit the model
    """
    config = config or checkpoint.run_config()
    model = MapSAM(config)
    model.restore_adapters(checkpoint.meta.get("adapter_mode", "frozen"))
    try:
        model.load_state_dict(checkpoint.model_state)
    except ShapeError as e:
        raise CheckpointError(f"checkpoint does not match the model: {e}") from e
    return model, config
