"""
Data Validator Module
Validates run configuration, datasets and checkpoints before any training step
"""

import os
from typing import List, Optional, Sequence, Tuple

from PIL import Image

from ..checkpoint import Checkpoint
from ..config import RunConfig
from ..data import DatasetSplit, Tile

MIN_FOREGROUND_FRACTION = 0.005
COMPATIBLE_SECTIONS = ("encoder", "prompt", "decoder")


class RunValidator:
    """Validates run inputs and data quality"""

    @staticmethod
    def validate_config(config: RunConfig) -> Tuple[bool, Optional[str]]:
        """
        Cross-section checks pydantic cannot see from inside one section

        Args:
            config: Validated run configuration

        Returns:
            Tuple of (is_valid, error_message)
        """
        if config.adaptation.rank > config.encoder.embed_dim:
            return False, f"rank {config.adaptation.rank} exceeds embed_dim {config.encoder.embed_dim}"

        if not 0.0 < config.prompt.threshold < 1.0 or not 0.0 < config.decoder.threshold < 1.0:
            return False, "mask thresholds must lie strictly between 0 and 1"

        if config.schedule.max_iters and config.schedule.max_iters < config.schedule.warmup_iters:
            return False, (
                f"max_iters {config.schedule.max_iters} is shorter than warmup_iters {config.schedule.warmup_iters}"
            )

        return True, None

    @staticmethod
    def validate_dataset(dataset: DatasetSplit, config: RunConfig, splits: Sequence[str] = ("train",)) -> Tuple[bool, Optional[str]]:
        """
        Check that the required splits exist on disk at the encoder's tile size

        Args:
            dataset: Loaded manifest
            config: Run configuration
            splits: Splits that must be non-empty

        Returns:
            Tuple of (is_valid, error_message)
        """
        # Check required splits
        empty = [split for split in splits if not dataset.ids(split)]
        if empty:
            return False, f"Empty splits in manifest: {', '.join(empty)}"

        # Check files exist
        missing = []
        for entry in dataset.entries:
            if entry.split not in splits:
                continue
            for path in (entry.raster_path, entry.mask_path):
                if not os.path.isfile(os.path.join(dataset.root, path)):
                    missing.append(path)
        if missing:
            return False, f"Missing tile files: {', '.join(missing[:5])}" + (" ..." if len(missing) > 5 else "")

        # Check tile size against the encoder
        first = next(e for e in dataset.entries if e.split in splits)
        try:
            with Image.open(os.path.join(dataset.root, first.raster_path)) as image:
                width, height = image.size
        except OSError as e:
            return False, f"Unreadable raster {first.raster_path}: {e}"
        size = config.encoder.image_size
        if (height, width) != (size, size):
            return False, f"Tiles are {height}×{width} but encoder.image_size is {size}"

        return True, None

    @staticmethod
    def validate_checkpoint_compatibility(checkpoint: Checkpoint, config: RunConfig) -> Tuple[bool, Optional[str]]:
        """
        A pretrain checkpoint must match the encoder shape; any later checkpoint must match
        encoder, prompt and decoder sections exactly

        Returns:
            Tuple of (is_valid, error_message)
        """
        stored = checkpoint.config
        current = config.snapshot()
        if checkpoint.stage == "pretrain":
            ignore = {"feature_tap_layers"}
            for key, value in current["encoder"].items():
                if key not in ignore and stored.get("encoder", {}).get(key) != value:
                    return False, f"encoder.{key} is {value} but the checkpoint has {stored.get('encoder', {}).get(key)}"
            return True, None

        for section in COMPATIBLE_SECTIONS:
            if stored.get(section) != current[section]:
                return False, f"[{section}] differs from the checkpoint"
        if checkpoint.meta.get("adapter_mode", "frozen") != "frozen":
            if stored.get("adaptation", {}).get("rank") != config.adaptation.rank:
                return False, "adaptation.rank differs from the checkpoint's adapters"
        return True, None

    @staticmethod
    def validate_data_quality(tiles: Sequence[Tile], config: RunConfig) -> Tuple[bool, List[str]]:
        """
        Validate data quality (warnings, not errors)

        Args:
            tiles: Loaded training tiles
            config: Run configuration

        Returns:
            Tuple of (is_acceptable, warnings)
        """
        warnings = []

        # Check for empty ground truth
        empty = [t.id for t in tiles if not t.gt_mask.any()]
        if empty:
            warnings.append(f"{len(empty)} tiles have an empty ground-truth mask")

        # Check for nearly empty ground truth
        faint = [t.id for t in tiles if 0 < t.foreground_fraction < MIN_FOREGROUND_FRACTION]
        if faint:
            warnings.append(f"{len(faint)} tiles have less than {MIN_FOREGROUND_FRACTION:.1%} foreground")

        # Check split size against the batch size
        if len(tiles) < config.training.batch_size:
            warnings.append(
                f"train split has {len(tiles)} tiles, fewer than batch_size {config.training.batch_size}"
            )

        # Check feature class
        classes = {t.feature_class for t in tiles}
        if classes and classes != {config.data.feature_class}:
            warnings.append(f"tiles are {sorted(classes)} but data.feature_class is {config.data.feature_class}")

        is_acceptable = len(empty) < len(tiles)
        return is_acceptable, warnings
