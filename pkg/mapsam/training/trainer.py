"""
Trainer Module
Seeded mini-batch loop shared by the pretrain and finetune stages
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..config import RunConfig
from ..data import Tile
from ..encoder import image_to_array
from ..errors import CheckpointError, ConfigError, DataError, NumericError, ShapeError
from ..evaluation import evaluate
from ..model import MapSAM
from ..tensor import get_tape
from .losses import batch_loss, composite_loss
from .optim import AdamW, clip_grad_norm
from .pretrain import ReconstructionHead, pretrain_loss
from .schedule import Schedule

logger = logging.getLogger(__name__)

STAGES = ("pretrain", "finetune")
LOG_FIELDS = ("epoch", "loss_coarse", "loss_final", "loss_overall", "val_iou", "val_f1", "lr")


@dataclass
class EpochMetrics:
    epoch: int
    loss_coarse: float
    loss_final: float
    loss_overall: float
    val_iou: float
    val_f1: float
    lr: float

    def to_line(self) -> str:
        return (
            f"{self.epoch} {self.loss_coarse:.6f} {self.loss_final:.6f} {self.loss_overall:.6f} "
            f"{self.val_iou:.6f} {self.val_f1:.6f} {self.lr:.8g}"
        )


@dataclass
class ResumeState:
    """Counters, RNG state and optimizer moments carried by a checkpoint"""

    epoch: int = 0
    iteration: int = 0
    rng_state: Optional[Dict[str, Any]] = None
    optimizer_state: Dict[str, np.ndarray] = field(default_factory=dict)
    step_count: int = 0
    head_state: Dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class TrainingResult:
    stage: str
    history: List[EpochMetrics]
    epoch: int
    iteration: int
    rng_state: Dict[str, Any]
    optimizer: Optional[AdamW]
    head: Optional[ReconstructionHead] = None

    @property
    def changed(self) -> bool:
        return bool(self.history)


def build_schedule(config: RunConfig, stage: str, batches_per_epoch: int, epochs: int) -> Schedule:
    if stage == "pretrain":
        return Schedule(config.training.pretrain_lr, config.training.pretrain_warmup, epochs * batches_per_epoch)
    max_iters = config.schedule.max_iters or epochs * batches_per_epoch
    return Schedule(config.schedule.base_lr, config.schedule.warmup_iters, max_iters)


def _check_inputs(model: MapSAM, stage: str, train_tiles: Sequence[Tile]):
    if stage not in STAGES:
        raise ConfigError(f"unknown training stage '{stage}', expected one of {STAGES}")
    if not train_tiles:
        raise DataError("training needs at least one train tile")
    size = model.image_size
    for tile in train_tiles:
        if tile.raster.shape != (size, size, 3):
            raise ConfigError(
                f"tile {tile.id} is {tile.raster.shape[0]}×{tile.raster.shape[1]} but encoder.image_size is {size}"
            )


def _finetune_loss(model: MapSAM, tiles: Sequence[Tile], config: RunConfig):
    reports = []
    for tile in tiles:
        result = model(image_to_array(tile.raster))
        reports.append(composite_loss(result.coarse_logits, result.final_logits, tile.gt_mask, config.loss))
    return batch_loss(reports)


def run_training(
    model: MapSAM,
    stage: str,
    train_tiles: Sequence[Tile],
    val_tiles: Sequence[Tile],
    config: RunConfig,
    log_path: Optional[str] = None,
    resume: Optional[ResumeState] = None,
) -> TrainingResult:
    """
    Train one stage for the configured number of epochs (a total; resumed runs continue numbering)

    Pretrain updates the encoder through masked-patch reconstruction. Finetune freezes the
    encoder base, injects adapters when the dora flag is set, and trains everything else on
    the composite segmentation loss. Zero epochs leave the model untouched.

    Raises:
        ConfigError / DataError: before the first step, for inconsistent inputs
        NumericError: if a batch loss is NaN or infinite
    """
    _check_inputs(model, stage, train_tiles)
    resume = resume or ResumeState()
    seed = config.training.seed
    rng = np.random.default_rng(seed)
    if resume.rng_state is not None:
        rng.bit_generator.state = resume.rng_state
    epochs = config.training.pretrain_epochs if stage == "pretrain" else config.training.epochs
    if resume.epoch >= epochs:
        logger.info("[%s] Nothing to do: checkpoint is at epoch %d of %d", stage.upper(), resume.epoch, epochs)
        return TrainingResult(stage, [], resume.epoch, resume.iteration, rng.bit_generator.state, None)

    if stage == "finetune":
        model.prepare_finetune(np.random.default_rng([seed, 1]))
        named = [(name, p) for name, p in model.named_parameters() if p.requires_grad]
        split = model.parameter_report()
        logger.info(
            "[FINETUNE] trainable %d / total %d (%.2f%%), encoder base weights with gradients: %d",
            split["trainable"], split["total"], 100.0 * split["trainable"] / split["total"],
            split["encoder_base_trainable"],
        )
        head = None
    else:
        model.encoder.unfreeze()
        head = ReconstructionHead(config.encoder.embed_dim, config.encoder.patch_size, np.random.default_rng([seed, 2]))
        if resume.head_state:
            try:
                head.load_state_dict(resume.head_state)
            except ShapeError as e:
                raise CheckpointError(f"reconstruction head does not match: {e}") from e
        named = [(f"encoder.{n}", p) for n, p in model.encoder.named_parameters()]
        named += [(f"recon_head.{n}", p) for n, p in head.named_parameters()]

    optimizer = AdamW(
        named,
        betas=(config.training.beta1, config.training.beta2),
        eps=config.training.adam_eps,
        weight_decay=config.training.weight_decay,
    )
    if resume.optimizer_state:
        optimizer.load_state_dict(resume.optimizer_state, resume.step_count)
    params = [p for _, p in named]

    batch_size = config.training.batch_size
    n_batches = math.ceil(len(train_tiles) / batch_size)
    schedule = build_schedule(config, stage, n_batches, epochs)
    iteration = resume.iteration
    history: List[EpochMetrics] = []

    for epoch in range(resume.epoch + 1, epochs + 1):
        order = rng.permutation(len(train_tiles))
        sums = np.zeros(3)
        lr = 0.0
        for start in range(0, len(order), batch_size):
            batch = [train_tiles[i] for i in order[start:start + batch_size]]
            get_tape().clear()
            optimizer.zero_grad()
            if stage == "finetune":
                report = _finetune_loss(model, batch, config)
                loss = report.overall
                values = report.values
            else:
                losses = [pretrain_loss(model.encoder, head, image_to_array(t.raster), rng, config.training.mask_ratio) for t in batch]
                loss = losses[0]
                for extra in losses[1:]:
                    loss = loss + extra
                loss = loss / float(len(losses)) if len(losses) > 1 else loss
                values = (float("nan"), float("nan"), loss.item())
            if not np.isfinite(loss.item()):
                get_tape().clear()
                raise NumericError(f"{stage} loss became {loss.item()} at epoch {epoch}, iteration {iteration + 1}")
            loss.backward()
            clip_grad_norm(params, config.training.grad_clip)
            lr = schedule(iteration + 1)
            optimizer.step(lr)
            iteration += 1
            sums += np.asarray(values)
        means = sums / n_batches
        val_iou = val_f1 = float("nan")
        if stage == "finetune" and val_tiles:
            report = evaluate(model, val_tiles, workers=config.training.workers)
            val_iou, val_f1 = report.iou, report.f1
        metrics = EpochMetrics(epoch, means[0], means[1], means[2], val_iou, val_f1, lr)
        history.append(metrics)
        logger.info("[%s] %s", stage.upper(), metrics.to_line())
        if log_path:
            with open(log_path, "a", encoding="utf-8") as f:
                f.write(metrics.to_line() + "\n")

    optimizer.zero_grad()
    return TrainingResult(stage, history, epochs, iteration, rng.bit_generator.state, optimizer, head)
