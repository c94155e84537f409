"""
Evaluator Module
Runs a model over a split and micro-aggregates the confusion counts
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from operator import add
from typing import List, Sequence

import numpy as np

from ..config import DEFAULT_MASK_THRESHOLD
from ..data import Tile
from ..encoder import image_to_array
from ..errors import DataError
from ..tensor import no_grad, sigmoid_array
from .metrics import ConfusionCounts, confusion, f1, iou

logger = logging.getLogger(__name__)


@dataclass
class TileResult:
    tile_id: str
    counts: ConfusionCounts

    @property
    def iou(self) -> float:
        return iou(self.counts)

    @property
    def f1(self) -> float:
        return f1(self.counts)


@dataclass
class EvaluationReport:
    """Micro-aggregated scores plus the per-tile rows they were summed from"""

    head: str
    rows: List[TileResult] = field(default_factory=list)

    @property
    def counts(self) -> ConfusionCounts:
        return reduce(add, (row.counts for row in self.rows), ConfusionCounts())

    @property
    def iou(self) -> float:
        return iou(self.counts)

    @property
    def f1(self) -> float:
        return f1(self.counts)


def predict_mask(model, tile: Tile, head: str = "final", threshold: float = DEFAULT_MASK_THRESHOLD) -> np.ndarray:
    """Binary H×W prediction of one tile (probability ≥ threshold)"""
    with no_grad():
        result = model(image_to_array(tile.raster))
        logits = model.head_logits(result, head)
    return sigmoid_array(logits.data[..., 0]) >= threshold


def evaluate(model, tiles: Sequence[Tile], head: str = "final", workers: int = 1) -> EvaluationReport:
    """
    Score every tile; counts are summed before IoU/F1 are computed

    Raises:
        DataError: on an empty tile list
    """
    if not tiles:
        raise DataError("evaluation needs at least one tile")

    def score(tile: Tile) -> TileResult:
        return TileResult(tile.id, confusion(predict_mask(model, tile, head), tile.gt_mask))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(score, tiles))
    else:
        rows = [score(tile) for tile in tiles]
    report = EvaluationReport(head=head, rows=rows)
    logger.debug("Evaluated %d tiles (%s head): IoU %.4f F1 %.4f", len(rows), head, report.iou, report.f1)
    return report
