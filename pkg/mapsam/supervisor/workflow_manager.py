"""
Workflow Manager Module
Runs the pretrain, finetune, evaluation and inference stages against datasets and checkpoints
"""

import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..checkpoint import Checkpoint, build_checkpoint, load_checkpoint, restore_model, save_checkpoint
from ..config import RunConfig
from ..data import DatasetSplit, Tile, load_tiles, pretrain_corpus, read_manifest, read_raster, write_mask, write_probability
from ..encoder import image_to_array
from ..errors import CheckpointError, ConfigError, DataError, ShapeError
from ..evaluation import EvaluationReport, evaluate
from ..model import MapSAM
from ..tensor import interpolate_bilinear, no_grad, sigmoid_array
from ..training import ResumeState, TrainingResult, run_training
from .data_validator import RunValidator

logger = logging.getLogger(__name__)


@dataclass
class StageOutcome:
    """Result of one training stage: the checkpoint written and the epochs it ran"""

    checkpoint: Checkpoint
    training: Optional[TrainingResult]

    @property
    def history(self):
        return self.training.history if self.training else []


class WorkflowManager:
    """Manages the pretrain -> finetune -> eval workflow for one run configuration"""

    def __init__(self, config: RunConfig):
        """Initialize workflow manager"""
        self.config = config
        self.validator = RunValidator()
        is_valid, error_message = self.validator.validate_config(config)
        if not is_valid:
            raise ConfigError(error_message)

    def load_dataset(self, manifest_path: str, splits: Sequence[str] = ("train",)) -> DatasetSplit:
        """
        Read a manifest and check it against the configuration

        Raises:
            DataError: if required splits or files are missing, or tiles have the wrong size
        """
        dataset = read_manifest(manifest_path)
        is_valid, error_message = self.validator.validate_dataset(dataset, self.config, splits)
        if not is_valid:
            raise DataError(error_message)
        return dataset

    def _train_tiles(self, datasets: Sequence[DatasetSplit]) -> List[Tile]:
        tiles: List[Tile] = []
        for dataset in datasets:
            tiles.extend(load_tiles(dataset, "train"))
        is_acceptable, warnings = self.validator.validate_data_quality(tiles, self.config)
        for warning in warnings:
            logger.warning("[DATA] %s", warning)
        if not is_acceptable:
            raise DataError("every training tile has an empty ground-truth mask")
        return tiles

    def _check_checkpoint(self, checkpoint: Checkpoint):
        is_valid, error_message = self.validator.validate_checkpoint_compatibility(checkpoint, self.config)
        if not is_valid:
            raise CheckpointError(f"checkpoint is incompatible with the run config: {error_message}")

    def pretrain_tiles(self, datasets: Sequence[DatasetSplit] = (), synthetic_count: int = 0) -> List[Tile]:
        """
        Pretraining rasters: a generated mixed-class corpus and/or the train tiles of datasets

        Only the rasters are used. The generated corpus is seeded from training.seed and never
        shares tile ids (hence seeds) with a labeled dataset.

        Raises:
            DataError: if neither source is given
        """
        tiles: List[Tile] = []
        if synthetic_count > 0:
            size = self.config.encoder.image_size
            tiles.extend(pretrain_corpus(synthetic_count, self.config.training.seed, size, self.config.training.workers))
        for dataset in datasets:
            tiles.extend(load_tiles(dataset, "train"))
        if not tiles:
            raise DataError("pretraining needs a synthetic corpus or at least one dataset")
        return tiles

    def run_pretrain(
        self,
        datasets: Sequence[DatasetSplit],
        out_path: str,
        log_path: Optional[str] = None,
        init_path: Optional[str] = None,
        synthetic_count: int = 0,
    ) -> StageOutcome:
        """
        Pretrain the encoder on unlabeled rasters

        A pretrain checkpoint as init_path resumes: epoch numbering, RNG, optimizer moments and
        the reconstruction head all continue from it.

        Args:
            datasets: Manifests whose train rasters are added to the corpus
            out_path: Checkpoint to write
            log_path: Metric log to append to
            init_path: Optional starting checkpoint
            synthetic_count: Size of the generated railway + vineyard corpus (0 for none)

        Returns:
            StageOutcome
        """
        tiles = self.pretrain_tiles(datasets, synthetic_count)
        model = MapSAM(self.config)
        source = None
        state = None
        if init_path:
            source = load_checkpoint(init_path)
            self._check_checkpoint(source)
            _load_encoder(model, source)
            if source.stage == "pretrain":
                state = ResumeState(
                    epoch=int(source.meta.get("epoch", 0)),
                    iteration=int(source.meta.get("iteration", 0)),
                    rng_state=source.meta.get("rng_state"),
                    optimizer_state=source.optimizer_state,
                    step_count=int(source.meta.get("optimizer_steps", 0)),
                    head_state=source.head_state,
                )
        start = state.epoch if state else 0
        if source is not None and self.config.training.pretrain_epochs <= start:
            save_checkpoint(out_path, source)
            logger.info("[PRETRAIN] No epochs to run; %s is the input checkpoint", out_path)
            return StageOutcome(source, None)

        result = run_training(model, "pretrain", tiles, [], self.config, log_path=log_path, resume=state)
        checkpoint = build_checkpoint(
            model, "pretrain", result.epoch, result.iteration, result.rng_state, result.optimizer, result.head
        )
        save_checkpoint(out_path, checkpoint)
        logger.info("[PRETRAIN] Wrote %s after %d epochs", out_path, result.epoch)
        return StageOutcome(checkpoint, result)

    def run_finetune(
        self,
        dataset: DatasetSplit,
        out_path: str,
        init_path: Optional[str] = None,
        log_path: Optional[str] = None,
        resume: bool = False,
        init_checkpoint: Optional[Checkpoint] = None,
    ) -> StageOutcome:
        """
        Finetune from a pretrain checkpoint, or resume a finetune checkpoint

        Zero epochs (or a checkpoint already at the target epoch) rewrite the input checkpoint unchanged.

        Args:
            dataset: Manifest with a train split (val optional)
            out_path: Checkpoint to write
            init_path: Pretrain checkpoint (or finetune checkpoint with resume=True)
            log_path: Metric log to append to
            resume: Continue counters, RNG and optimizer state from init_path
            init_checkpoint: Already loaded checkpoint, used instead of init_path

        Returns:
            StageOutcome
        """
        tiles = self._train_tiles([dataset])
        val_tiles = load_tiles(dataset, "val")
        source = init_checkpoint or (load_checkpoint(init_path) if init_path else None)
        if resume and (source is None or source.stage != "finetune"):
            raise CheckpointError("--resume needs a finetune checkpoint")
        if source is not None:
            self._check_checkpoint(source)

        state = None
        if source is None:
            logger.warning("[FINETUNE] No pretrain checkpoint given; the encoder starts from random weights")
            model = MapSAM(self.config)
        elif source.stage == "pretrain":
            model = MapSAM(self.config)
            _load_encoder(model, source)
        else:
            model, _ = restore_model(source, self.config)
            if resume:
                state = ResumeState(
                    epoch=int(source.meta.get("epoch", 0)),
                    iteration=int(source.meta.get("iteration", 0)),
                    rng_state=source.meta.get("rng_state"),
                    optimizer_state=source.optimizer_state,
                    step_count=int(source.meta.get("optimizer_steps", 0)),
                )

        start = state.epoch if state else 0
        if source is not None and self.config.training.epochs <= start:
            save_checkpoint(out_path, source)
            logger.info("[FINETUNE] No epochs to run; %s is the input checkpoint", out_path)
            return StageOutcome(source, None)

        result = run_training(model, "finetune", tiles, val_tiles, self.config, log_path=log_path, resume=state)
        checkpoint = build_checkpoint(
            model, "finetune", result.epoch, result.iteration, result.rng_state, result.optimizer
        )
        save_checkpoint(out_path, checkpoint)
        logger.info("[FINETUNE] Wrote %s after epoch %d", out_path, result.epoch)
        return StageOutcome(checkpoint, result)

    def run_evaluation(
        self,
        checkpoint: Checkpoint,
        dataset: DatasetSplit,
        split: str = "test",
        head: str = "final",
    ) -> EvaluationReport:
        """
        Evaluate a checkpoint (under its own stored configuration) on one split

        Raises:
            DataError: if the split is empty or a tile is missing
        """
        model, config = restore_model(checkpoint)
        tiles = load_tiles(dataset, split)
        if not tiles:
            raise DataError(f"split '{split}' is empty")
        return evaluate(model, tiles, head=head, workers=self.config.training.workers)

    def run_inference(
        self,
        checkpoint: Checkpoint,
        raster_path: str,
        out_dir: str,
        dump_intermediates: bool = False,
    ) -> Dict[str, str]:
        """
        Predict one raster and write final.pgm (plus intermediates on request)

        Intermediates: coarse.pgm and coarse_layer<k>.pgm per tap as grey-level probability
        maps (round(p·255)), points.txt (`row col label`) and the binary decoder masks
        mask_l<l>.pgm for M_0 … M_L.

        Returns:
            Mapping of artifact name to written path
        """
        model, config = restore_model(checkpoint)
        raster = read_raster(raster_path)
        size = config.encoder.image_size
        if raster.shape[:2] != (size, size):
            raise ShapeError(f"raster is {raster.shape[0]}×{raster.shape[1]}, the model expects {size}×{size}")
        os.makedirs(out_dir, exist_ok=True)
        with no_grad():
            result = model(image_to_array(raster))
            threshold = config.decoder.threshold
            written = {"final": _write(out_dir, "final.pgm", sigmoid_array(result.final_logits.data[..., 0]) >= threshold)}
            if dump_intermediates:
                coarse = model.head_logits(result, "coarse")
                written["coarse"] = _write_probability(out_dir, "coarse.pgm", sigmoid_array(coarse.data[..., 0]))
                for layer, logits in result.layer_logits.items():
                    up = interpolate_bilinear(logits, size, size)
                    written[f"coarse_layer{layer}"] = _write_probability(
                        out_dir, f"coarse_layer{layer}.pgm", sigmoid_array(up.data[..., 0])
                    )
                for index, mask in enumerate(result.decoder.layer_masks):
                    written[f"mask_l{index}"] = _write(out_dir, f"mask_l{index}.pgm", mask)
                points_path = os.path.join(out_dir, "points.txt")
                with open(points_path, "w", encoding="utf-8") as f:
                    for (row, col), label in zip(result.prompts.point_coords, result.prompts.labels):
                        f.write(f"{row} {col} {int(label)}\n")
                written["points"] = points_path
        logger.info("[INFER] Wrote %d files to %s", len(written), out_dir)
        return written


def _write(out_dir: str, name: str, mask: np.ndarray) -> str:
    path = os.path.join(out_dir, name)
    write_mask(path, mask)
    return path


def _write_probability(out_dir: str, name: str, probabilities: np.ndarray) -> str:
    path = os.path.join(out_dir, name)
    write_probability(path, probabilities)
    return path


def _load_encoder(model: MapSAM, checkpoint: Checkpoint):
    """Copy only the encoder weights of a checkpoint into the model"""
    prefix = "encoder."
    state = {k[len(prefix):]: v for k, v in checkpoint.model_state.items() if k.startswith(prefix)}
    adapter_mode = checkpoint.meta.get("adapter_mode", "frozen")
    if adapter_mode != "frozen":
        model.restore_adapters(adapter_mode)
    try:
        model.encoder.load_state_dict(state)
    except ShapeError as e:
        raise CheckpointError(f"checkpoint encoder does not match: {e}") from e
