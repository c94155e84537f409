"""
Dataset Module
Writes generated tiles as PPM/PGM, keeps the manifest and draws few-shot subsets
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from PIL import Image

from ..errors import ConfigError, DataError
from .mapgen import FEATURE_CLASSES, Tile, generate_tile, tile_seed

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"
TILE_DIR = "tiles"
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ManifestEntry:
    """One manifest line: `id class seed split raster_path mask_path` (paths relative to the root)"""

    id: str
    feature_class: str
    seed: int
    split: str
    raster_path: str
    mask_path: str

    def to_line(self) -> str:
        return f"{self.id} {self.feature_class} {self.seed} {self.split} {self.raster_path} {self.mask_path}"

    @classmethod
    def from_line(cls, line: str) -> "ManifestEntry":
        parts = line.split()
        if len(parts) != 6:
            raise DataError(f"manifest line needs 6 fields, got {len(parts)}: '{line}'")
        tile_id, feature_class, seed, split, raster_path, mask_path = parts
        if split not in SPLITS:
            raise DataError(f"tile {tile_id}: unknown split '{split}'")
        try:
            seed_value = int(seed)
        except ValueError as e:
            raise DataError(f"tile {tile_id}: seed '{seed}' is not an integer") from e
        return cls(tile_id, feature_class, seed_value, split, raster_path, mask_path)


@dataclass
class DatasetSplit:
    """Manifest entries under one root directory, grouped by split"""

    root: str
    entries: List[ManifestEntry]
    regime: str = "full"
    size: Optional[int] = field(default=None)

    def ids(self, split: str) -> List[str]:
        return [e.id for e in self.entries if e.split == split]

    @property
    def train(self) -> List[str]:
        return self.ids("train")

    @property
    def val(self) -> List[str]:
        return self.ids("val")

    @property
    def test(self) -> List[str]:
        return self.ids("test")

    def entry(self, tile_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.id == tile_id:
                return e
        raise DataError(f"tile '{tile_id}' is not in the manifest")

    @property
    def feature_classes(self) -> List[str]:
        return sorted({e.feature_class for e in self.entries})


def split_counts(counts) -> Dict[str, int]:
    if isinstance(counts, dict):
        values = {name: int(counts.get(name, 0)) for name in SPLITS}
    else:
        values = dict(zip(SPLITS, (int(c) for c in counts)))
    if any(v < 0 for v in values.values()) or sum(values.values()) == 0:
        raise ConfigError(f"split counts must be non-negative with a positive total, got {values}")
    return values


def write_tile(root: str, tile: Tile, split: str) -> ManifestEntry:
    """Write `tiles/<id>.ppm` (P6) and `tiles/<id>_mask.pgm` (P5, 0/255)"""
    raster_path = os.path.join(TILE_DIR, f"{tile.id}.ppm")
    mask_path = os.path.join(TILE_DIR, f"{tile.id}_mask.pgm")
    try:
        Image.fromarray(np.ascontiguousarray(tile.raster, dtype=np.uint8)).save(os.path.join(root, raster_path), format="PPM")
        mask = tile.gt_mask.astype(np.uint8) * 255
        Image.fromarray(mask).save(os.path.join(root, mask_path), format="PPM")
    except OSError as e:
        raise DataError(f"cannot write tile {tile.id} under {root}: {e}") from e
    return ManifestEntry(tile.id, tile.feature_class, tile.seed, split, raster_path, mask_path)


def read_raster(path: str) -> np.ndarray:
    try:
        with Image.open(path) as image:
            return np.asarray(image.convert("RGB"), dtype=np.uint8).copy()
    except (OSError, ValueError) as e:
        raise DataError(f"cannot read raster {path}: {e}") from e


def read_mask(path: str) -> np.ndarray:
    try:
        with Image.open(path) as image:
            return np.asarray(image.convert("L"), dtype=np.uint8) > 127
    except (OSError, ValueError) as e:
        raise DataError(f"cannot read mask {path}: {e}") from e


def write_mask(path: str, mask: np.ndarray):
    """Binary mask as PGM with 0/255 values"""
    try:
        Image.fromarray(np.asarray(mask, dtype=bool).astype(np.uint8) * 255).save(path, format="PPM")
    except OSError as e:
        raise DataError(f"cannot write mask {path}: {e}") from e


def write_probability(path: str, probabilities: np.ndarray):
    """Probability map in [0, 1] as an 8-bit grey PGM, round(p·255)"""
    levels = np.rint(np.clip(probabilities, 0.0, 1.0) * 255.0).astype(np.uint8)
    try:
        Image.fromarray(levels).save(path, format="PPM")
    except OSError as e:
        raise DataError(f"cannot write probability map {path}: {e}") from e


def write_manifest(path: str, entries: Sequence[ManifestEntry]):
    try:
        with open(path, "w", encoding="utf-8") as f:
            for entry in entries:
                f.write(entry.to_line() + "\n")
    except OSError as e:
        raise DataError(f"cannot write manifest {path}: {e}") from e


def read_manifest(path: str) -> DatasetSplit:
    """
    Load a manifest; tile paths resolve against the manifest's directory

    Raises:
        DataError: if the file is missing or malformed
    """
    if not os.path.isfile(path):
        raise DataError(f"manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.strip() for line in f]
    entries = [ManifestEntry.from_line(line) for line in lines if line and not line.startswith("#")]
    ids = [e.id for e in entries]
    if len(set(ids)) != len(ids):
        raise DataError(f"manifest {path} lists duplicate tile ids")
    return DatasetSplit(root=os.path.dirname(os.path.abspath(path)), entries=entries)


def build_dataset(
    feature_class: str,
    counts,
    root_seed: int,
    root: str,
    size: int = 64,
    workers: int = 1,
    manifest_name: str = MANIFEST_NAME,
) -> DatasetSplit:
    """
    Generate and write a full dataset

    Args:
        feature_class: railway or vineyard
        counts: (train, val, test) or a dict with those keys
        root_seed: Seed every tile seed derives from
        root: Output directory (created if needed)
        size: Tile side length
        workers: Threads used for generation and writing

    Returns:
        DatasetSplit describing the written manifest
    """
    if feature_class not in FEATURE_CLASSES:
        raise ConfigError(f"unknown feature class '{feature_class}'")
    sizes = split_counts(counts)
    try:
        os.makedirs(os.path.join(root, TILE_DIR), exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create dataset directory {root}: {e}") from e

    plan = []
    index = 0
    for split in SPLITS:
        for _ in range(sizes[split]):
            tile_id = f"{feature_class}_{index:05d}"
            plan.append((tile_id, split))
            index += 1

    def make(item):
        tile_id, split = item
        tile = generate_tile(feature_class, tile_seed(root_seed, tile_id), size, tile_id)
        return write_tile(root, tile, split)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(make, plan))
    else:
        entries = [make(item) for item in plan]

    write_manifest(os.path.join(root, manifest_name), entries)
    logger.info(
        "[GEN] Wrote %d %s tiles (%d/%d/%d) to %s",
        len(entries), feature_class, sizes["train"], sizes["val"], sizes["test"], root,
    )
    return DatasetSplit(root=os.path.abspath(root), entries=entries, size=size)


def pretrain_corpus(count: int, root_seed: int, size: int = 64, workers: int = 1) -> List[Tile]:
    """
    Unlabeled railway and vineyard tiles (alternating) for encoder pretraining, kept in memory

    Ids carry a `pretrain_` prefix, so their seeds never coincide with a labeled dataset
    generated from the same root seed.
    """
    if count < 1:
        raise ConfigError(f"pretrain corpus needs at least one tile, got {count}")
    plan = []
    for index in range(count):
        feature_class = FEATURE_CLASSES[index % len(FEATURE_CLASSES)]
        plan.append((feature_class, f"pretrain_{feature_class}_{index:05d}"))

    def make(item):
        feature_class, tile_id = item
        return generate_tile(feature_class, tile_seed(root_seed, tile_id), size, tile_id)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tiles = list(pool.map(make, plan))
    else:
        tiles = [make(item) for item in plan]
    logger.info("[GEN] Generated %d mixed pretrain tiles (root seed %d)", len(tiles), root_seed)
    return tiles


def subsample(dataset: DatasetSplit, seed: int, k_shot: Optional[int] = None, fraction: Optional[float] = None) -> DatasetSplit:
    """
    Keep a seeded subset of the train split (drawn without replacement); val/test stay whole

    Exactly one of k_shot / fraction must be given. A fraction keeps round(fraction·n), at least 1.
    """
    if (k_shot is None) == (fraction is None):
        raise ConfigError("give exactly one of k_shot or fraction")
    train = dataset.train
    if k_shot is not None:
        count, regime = int(k_shot), f"{int(k_shot)}-shot"
    else:
        if not 0.0 < fraction <= 1.0:
            raise ConfigError(f"fraction must lie in (0, 1], got {fraction}")
        count, regime = max(1, int(round(fraction * len(train)))), f"{fraction:g} fraction"
    if count < 1 or count > len(train):
        raise ConfigError(f"cannot draw {count} tiles from a train split of {len(train)}")
    chosen = set(np.random.default_rng(seed).choice(len(train), size=count, replace=False).tolist())
    keep = {train[i] for i in chosen}
    entries = [e for e in dataset.entries if e.split != "train" or e.id in keep]
    return replace(dataset, entries=entries, regime=regime)


def load_tile(dataset: DatasetSplit, tile_id: str) -> Tile:
    entry = dataset.entry(tile_id)
    raster = read_raster(os.path.join(dataset.root, entry.raster_path))
    mask = read_mask(os.path.join(dataset.root, entry.mask_path))
    if raster.shape[:2] != mask.shape:
        raise DataError(f"tile {tile_id}: raster {raster.shape[:2]} and mask {mask.shape} differ")
    return Tile(raster, mask, entry.feature_class, entry.seed, entry.id)


def load_tiles(dataset: DatasetSplit, split: str) -> List[Tile]:
    """Read every tile of one split from disk, in manifest order"""
    return [load_tile(dataset, tile_id) for tile_id in dataset.ids(split)]
