"""
Experiment Supervisor Module
Coordinates multi-seed experiments: the cumulative component ablation and the tap-layer sweep
"""

import logging
import os
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..checkpoint import Checkpoint
from ..config import RunConfig
from ..data import DatasetSplit
from ..evaluation import ReportBuilder
from .workflow_manager import WorkflowManager

logger = logging.getLogger(__name__)

# cumulative rows: each adds one component to the previous
ABLATION_VARIANTS: Tuple[Tuple[str, Dict[str, bool]], ...] = (
    ("Positional Prompt", {"dora": False, "semantic_prompt": False, "masked_attention": False}),
    ("+ DoRA", {"dora": True, "semantic_prompt": False, "masked_attention": False}),
    ("+ Semantic Prompt", {"dora": True, "semantic_prompt": True, "masked_attention": False}),
    ("+ Masked Attention", {"dora": True, "semantic_prompt": True, "masked_attention": True}),
)


def tap_sweep_sets(num_layers: int) -> List[Tuple[int, ...]]:
    """
    Last layer only, then two, three and all layers; always ending at the last layer

    For 4 layers: {4}, {2,4}, {1,3,4}, {1,2,3,4}.
    """
    last = num_layers
    candidates = [
        (last,),
        (max(1, last // 2), last),
        (1, max(1, last - 1), last),
        tuple(range(1, last + 1)),
    ]
    sets: List[Tuple[int, ...]] = []
    for candidate in candidates:
        normalized = tuple(sorted(set(candidate)))
        if normalized not in sets:
            sets.append(normalized)
    return sets


@dataclass
class AblationResult:
    """Per-variant test IoU over seeds plus the parameter names each variant trained"""

    rows: List[Tuple[str, List[float]]] = field(default_factory=list)
    parameter_names: Dict[str, List[str]] = field(default_factory=dict)

    @property
    def table(self) -> str:
        return ReportBuilder.build_ablation_table(self.rows)

    def means(self) -> Dict[str, float]:
        return {name: ReportBuilder.mean_sd(values)[0] for name, values in self.rows}


@dataclass
class TapSweepResult:
    rows: List[Tuple[Tuple[int, ...], List[float], List[float]]] = field(default_factory=list)

    @property
    def table(self) -> str:
        return ReportBuilder.build_tap_sweep_table(self.rows)


class ExperimentSupervisor:
    """
    Supervisor that runs whole experiments over several seeds

    Responsibilities:
    - Pretrain the encoder once per seed and share it across every variant of that seed
    - Finetune each variant from that shared checkpoint
    - Evaluate on the test split and assemble mean±sd tables
    """

    def __init__(self, config: RunConfig, dataset: DatasetSplit, work_dir: Optional[str] = None):
        """Initialize the supervisor"""
        self.config = config
        self.dataset = dataset
        self.work_dir = work_dir or tempfile.mkdtemp(prefix="mapsam_")
        os.makedirs(self.work_dir, exist_ok=True)
        self._pretrained: Dict[int, Checkpoint] = {}

    def _seeded(self, seed: int, **overrides) -> RunConfig:
        values = {"training.seed": seed}
        values.update(overrides)
        return self.config.with_overrides(values)

    def pretrained(self, seed: int) -> Checkpoint:
        """
        Pretrain checkpoint for one seed, computed once

        The encoder sees only the generated railway + vineyard corpus, never the target dataset.
        """
        if seed not in self._pretrained:
            config = self._seeded(seed)
            manager = WorkflowManager(config)
            path = os.path.join(self.work_dir, f"pretrain_s{seed}.msam")
            outcome = manager.run_pretrain([], path, synthetic_count=config.data.pretrain_count)
            self._pretrained[seed] = outcome.checkpoint
        return self._pretrained[seed]

    def _finetune_and_score(self, config: RunConfig, seed: int, tag: str):
        manager = WorkflowManager(config)
        path = os.path.join(self.work_dir, f"{tag}_s{seed}.msam")
        log_path = os.path.join(self.work_dir, f"{tag}_s{seed}.log")
        outcome = manager.run_finetune(
            self.dataset, path, log_path=log_path, init_checkpoint=self.pretrained(seed)
        )
        final = manager.run_evaluation(outcome.checkpoint, self.dataset, "test", head="final")
        coarse = manager.run_evaluation(outcome.checkpoint, self.dataset, "test", head="coarse")
        return outcome.checkpoint, final, coarse

    def run_component_ablation(self, seeds: Sequence[int]) -> AblationResult:
        """
        Four cumulative variants (positional prompt -> +DoRA -> +semantic -> +masked attention)

        Returns:
            AblationResult with one row per variant
        """
        result = AblationResult()
        for name, flags in ABLATION_VARIANTS:
            ious = []
            tag = name.strip("+ ").lower().replace(" ", "_")
            for seed in seeds:
                overrides = {f"ablation.{key}": value for key, value in flags.items()}
                config = self._seeded(seed, **overrides)
                checkpoint, final, _ = self._finetune_and_score(config, seed, tag)
                ious.append(final.iou)
                result.parameter_names[name] = list(checkpoint.model_state)
                logger.info("[ABLATE] %s seed %d: test IoU %.4f", name, seed, final.iou)
            result.rows.append((name, ious))
        return result

    def run_tap_sweep(self, seeds: Sequence[int], tap_sets: Optional[Sequence[Sequence[int]]] = None) -> TapSweepResult:
        """
        Full model with each tap-layer set; reports coarse-mask and final IoU

        Returns:
            TapSweepResult with one row per tap set
        """
        sets = [tuple(s) for s in tap_sets] if tap_sets else tap_sweep_sets(self.config.encoder.num_layers)
        result = TapSweepResult()
        for taps in sets:
            coarse_ious, final_ious = [], []
            tag = "taps_" + "_".join(str(t) for t in taps)
            for seed in seeds:
                config = self._seeded(seed, **{"encoder.feature_tap_layers": list(taps)})
                _, final, coarse = self._finetune_and_score(config, seed, tag)
                coarse_ious.append(coarse.iou)
                final_ious.append(final.iou)
                logger.info("[ABLATE] taps %s seed %d: coarse IoU %.4f final IoU %.4f", taps, seed, coarse.iou, final.iou)
            result.rows.append((taps, coarse_ious, final_ious))
        return result
