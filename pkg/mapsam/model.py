"""
MapSAM Model Module
Assembles encoder, auto-prompt generator, prompt encoder and mask decoder into one forward pass
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .adaptation import AdaptationMode, trainable_parameter_count
from .config import RunConfig
from .decoder import DecoderOutput, MaskDecoder
from .encoder import ImageEncoder, LayerFeatures
from .errors import ConfigError
from .prompt import (
    AutoPromptGenerator,
    CoarseMask,
    Point,
    PointLabel,
    PromptEncoder,
    PromptTokens,
    TargetEmbedding,
    positional_semantic_tokens,
    select_points,
    target_embedding,
)
from .tensor import Module, Tensor, interpolate_bilinear

logger = logging.getLogger(__name__)

HEADS = ("final", "coarse")


@dataclass
class ForwardResult:
    """Everything one forward pass produces, from tap features to the final logits"""

    features: LayerFeatures
    layer_logits: Dict[int, Tensor]
    coarse: CoarseMask
    points: Tuple[Point, Point]
    prompts: PromptTokens
    target: Optional[TargetEmbedding]
    decoder: DecoderOutput

    @property
    def final_logits(self) -> Tensor:
        return self.decoder.logits

    @property
    def coarse_logits(self) -> Tensor:
        """Fused coarse logits at feature resolution (h×w×1)"""
        return self.coarse.logits

    def decisions(self) -> Tuple:
        """Discrete choices of the pass; perturbations that change these break finite differences"""
        return (self.points, tuple(m.tobytes() for m in self.decoder.layer_masks))


class MapSAM(Module):
    """
    Full model under one RunConfig

    The ablation flags decide whether fine-tuning injects DoRA, whether the target embedding
    is added to the point tokens, and whether the decoder masks its cross-attention.
    """

    def __init__(self, config: RunConfig, rng: Optional[np.random.Generator] = None):
        self.config = config
        rng = rng if rng is not None else np.random.default_rng(config.training.seed)
        dim = config.encoder.embed_dim
        self.encoder = ImageEncoder(config.encoder, rng)
        self.prompt_generator = AutoPromptGenerator(
            config.encoder.feature_tap_layers, dim, rng, threshold=config.prompt.threshold
        )
        self.prompt_encoder = PromptEncoder(
            dim, rng, config.prompt.fourier_seed, config.prompt.fourier_scale
        )
        self.decoder = MaskDecoder(dim, config.decoder, rng)

    @property
    def flags(self):
        return self.config.ablation

    @property
    def image_size(self) -> int:
        return self.config.encoder.image_size

    def forward(self, image: np.ndarray) -> ForwardResult:
        """
        Args:
            image: image_size×image_size×3 values in [0, 1]
        """
        features = self.encoder.encode(image)
        layer_logits, coarse = self.prompt_generator(features)
        points = select_points(coarse, self.image_size)
        prompts = self.prompt_encoder(list(points), [PointLabel.POSITIVE, PointLabel.NEGATIVE], self.image_size)
        target = None
        if self.flags.semantic_prompt:
            target = target_embedding(features.final, coarse)
            prompts = positional_semantic_tokens(prompts, target)
        g = self.config.encoder.grid_size
        output = self.decoder(
            features.final,
            prompts,
            coarse,
            self.image_size,
            image_pe=self.prompt_encoder.dense_positional_encoding(g, g),
            masked=self.flags.masked_attention,
        )
        return ForwardResult(features, layer_logits, coarse, points, prompts, target, output)

    def head_logits(self, result: ForwardResult, head: str = "final") -> Tensor:
        """Image-resolution logits of the chosen head"""
        if head == "final":
            return result.final_logits
        if head == "coarse":
            return interpolate_bilinear(result.coarse_logits, self.image_size, self.image_size)
        raise ConfigError(f"unknown evaluation head '{head}', expected one of {HEADS}")

    def prepare_finetune(self, rng: np.random.Generator):
        """
        Freeze every encoder weight; inject LoRA/DoRA into Q/V when the dora flag is set

        Idempotent on a model that already carries adapters.
        """
        if self.encoder.adaptation_mode != AdaptationMode.FROZEN:
            return
        if self.flags.dora:
            adaptation = self.config.adaptation
            self.encoder.enable_adaptation(
                AdaptationMode(adaptation.mode), adaptation.rank, rng,
                scale=adaptation.scale, init_std=adaptation.init_std,
            )
        else:
            self.encoder.freeze()
            logger.info("Encoder frozen without adapters")

    def restore_adapters(self, mode: str):
        """Recreate adapter parameters (values are overwritten by load_state_dict)"""
        mode = AdaptationMode(mode)
        if mode == AdaptationMode.FROZEN or self.encoder.adaptation_mode == mode:
            return
        adaptation = self.config.adaptation
        self.encoder.enable_adaptation(
            mode, adaptation.rank, np.random.default_rng(0),
            scale=adaptation.scale, init_std=adaptation.init_std,
        )

    def parameter_report(self) -> Dict[str, int]:
        """Trainable/frozen split plus the count of gradient-enabled encoder base weights"""
        trainable, total = trainable_parameter_count(self)
        base_trainable = sum(
            p.size for name, p in self.encoder.named_parameters()
            if p.requires_grad and not _is_adapter_name(name)
        )
        return {
            "trainable": trainable,
            "total": total,
            "frozen": total - trainable,
            "encoder_base_trainable": base_trainable,
        }


def _is_adapter_name(name: str) -> bool:
    leaf = name.rsplit(".", 1)[-1]
    return leaf in ("lora_a", "lora_b", "magnitude")


def adapter_parameter_names(model: MapSAM) -> List[str]:
    return [name for name, _ in model.named_parameters() if _is_adapter_name(name)]
