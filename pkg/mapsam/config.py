"""
Configuration module for MapSAM
Contains all default settings and the validated run configuration
"""

import configparser
import os
from typing import Any, Dict, List, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

# Encoder Configuration
DEFAULT_IMAGE_SIZE = 64
DEFAULT_PATCH_SIZE = 8
DEFAULT_EMBED_DIM = 64
DEFAULT_NUM_LAYERS = 4
DEFAULT_NUM_HEADS = 4
DEFAULT_MLP_RATIO = 4
DEFAULT_TAP_LAYERS = (1, 2, 3, 4)

# Adaptation Configuration
DEFAULT_ADAPTATION_MODE = "dora"
DEFAULT_RANK = 4
DEFAULT_LORA_INIT_STD = 0.01

# Prompt Configuration
DEFAULT_MASK_THRESHOLD = 0.5  # probability >= threshold is foreground
DEFAULT_FOURIER_SCALE = 1.0
DEFAULT_FOURIER_SEED = 1234

# Decoder Configuration
DEFAULT_DECODER_LAYERS = 2
DEFAULT_DECODER_ATTENTION_DIM = 8
DEFAULT_DECODER_HEADS = 2
DEFAULT_DECODER_MLP_DIM = 16
DEFAULT_MASK_HEAD_DIM = 8

# Loss Configuration
DEFAULT_LAMBDA = 0.2
DEFAULT_FOCAL_GAMMA = 2.0
DEFAULT_FOCAL_ALPHA = 0.5
DEFAULT_DICE_EPS = 1.0

# Schedule Configuration
DEFAULT_BASE_LR = 0.005
DEFAULT_WARMUP_ITERS = 250
DEFAULT_MAX_ITERS = 0  # 0 means epochs * batches per epoch

# Training Configuration
DEFAULT_EPOCHS = 40
DEFAULT_BATCH_SIZE = 8
DEFAULT_WEIGHT_DECAY = 0.01
DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_ADAM_EPS = 1e-8
DEFAULT_GRAD_CLIP = 1.0
DEFAULT_PRETRAIN_EPOCHS = 20
DEFAULT_PRETRAIN_LR = 0.001
DEFAULT_PRETRAIN_WARMUP = 50
DEFAULT_MASK_RATIO = 0.5
DEFAULT_SEED = 0
DEFAULT_WORKERS = 1

# Data Configuration
DEFAULT_FEATURE_CLASS = "railway"
DEFAULT_SPLIT_COUNTS = (140, 20, 40)  # 7:1:2
DEFAULT_DATA_ROOT = "data"
DEFAULT_PRETRAIN_COUNT = 200  # mixed railway + vineyard, unlabeled

# Few-shot acceptance threshold on synthetic railway (test IoU)
FEW_SHOT_IOU_THRESHOLD = 0.5

CONFIG_VERSION = 1
SEED_ENV_VAR = "MAPSAM_SEED"


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [int(part) for part in value.replace(" ", "").split(",") if part]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class EncoderConfig(_Section):
    """Miniature ViT encoder dimensions and tap layers"""

    image_size: int = DEFAULT_IMAGE_SIZE
    patch_size: int = DEFAULT_PATCH_SIZE
    embed_dim: int = DEFAULT_EMBED_DIM
    num_layers: int = DEFAULT_NUM_LAYERS
    num_heads: int = DEFAULT_NUM_HEADS
    mlp_ratio: int = DEFAULT_MLP_RATIO
    feature_tap_layers: List[int] = Field(default_factory=lambda: list(DEFAULT_TAP_LAYERS))

    @field_validator("feature_tap_layers", mode="before")
    @classmethod
    def _parse_taps(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("feature_tap_layers")
    @classmethod
    def _sort_taps(cls, value: List[int]) -> List[int]:
        if len(set(value)) != len(value):
            raise ValueError(f"feature tap layers must be unique, got {value}")
        return sorted(value)

    @model_validator(mode="after")
    def _check_shapes(self) -> "EncoderConfig":
        if self.patch_size < 1 or self.image_size % self.patch_size != 0:
            raise ValueError(
                f"image_size {self.image_size} must be divisible by patch_size {self.patch_size}"
            )
        if self.num_heads < 1 or self.embed_dim % self.num_heads != 0:
            raise ValueError(
                f"embed_dim {self.embed_dim} must be divisible by num_heads {self.num_heads}"
            )
        # coarse heads reduce C -> C/4 -> C/16; the Fourier encoding needs an even width
        if self.embed_dim % 16 != 0:
            raise ValueError(f"embed_dim {self.embed_dim} must be a multiple of 16")
        taps = self.feature_tap_layers
        if not taps or taps[0] < 1 or taps[-1] > self.num_layers:
            raise ValueError(f"tap layers {taps} must lie within [1, {self.num_layers}]")
        if self.num_layers not in taps:
            raise ValueError(f"tap layers {taps} must include the last layer {self.num_layers}")
        return self

    @property
    def grid_size(self) -> int:
        """Feature grid side length (image_size / patch_size)"""
        return self.image_size // self.patch_size

    @property
    def num_tokens(self) -> int:
        return self.grid_size * self.grid_size


class AdaptationConfig(_Section):
    mode: str = DEFAULT_ADAPTATION_MODE
    rank: int = DEFAULT_RANK
    alpha: Optional[float] = None  # None means alpha = rank (scale 1.0)
    init_std: float = DEFAULT_LORA_INIT_STD

    @field_validator("alpha", mode="before")
    @classmethod
    def _parse_alpha(cls, value: Any) -> Any:
        if isinstance(value, str) and value.strip().lower() in ("", "none"):
            return None
        return value

    @model_validator(mode="after")
    def _check(self) -> "AdaptationConfig":
        if self.mode not in ("lora", "dora"):
            raise ValueError(f"adaptation mode must be 'lora' or 'dora', got '{self.mode}'")
        if self.rank < 1:
            raise ValueError(f"rank must be a positive integer, got {self.rank}")
        return self

    @property
    def scale(self) -> float:
        alpha = float(self.rank) if self.alpha is None else self.alpha
        return alpha / self.rank


class PromptConfig(_Section):
    threshold: float = DEFAULT_MASK_THRESHOLD
    fourier_scale: float = DEFAULT_FOURIER_SCALE
    fourier_seed: int = DEFAULT_FOURIER_SEED


class DecoderConfig(_Section):
    num_layers: int = DEFAULT_DECODER_LAYERS
    attention_dim: int = DEFAULT_DECODER_ATTENTION_DIM
    num_heads: int = DEFAULT_DECODER_HEADS
    mlp_dim: int = DEFAULT_DECODER_MLP_DIM
    mask_head_dim: int = DEFAULT_MASK_HEAD_DIM
    threshold: float = DEFAULT_MASK_THRESHOLD

    @model_validator(mode="after")
    def _check(self) -> "DecoderConfig":
        if self.num_layers < 1:
            raise ValueError("decoder needs at least one layer")
        if self.attention_dim % self.num_heads != 0:
            raise ValueError(
                f"attention_dim {self.attention_dim} must be divisible by num_heads {self.num_heads}"
            )
        return self


class LossConfig(_Section):
    lambda_: float = Field(default=DEFAULT_LAMBDA, alias="lambda")
    focal_gamma: float = DEFAULT_FOCAL_GAMMA
    focal_alpha: float = DEFAULT_FOCAL_ALPHA
    dice_eps: float = DEFAULT_DICE_EPS

    @field_validator("lambda_")
    @classmethod
    def _check_lambda(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {value}")
        return value


class ScheduleConfig(_Section):
    base_lr: float = DEFAULT_BASE_LR
    warmup_iters: int = DEFAULT_WARMUP_ITERS
    max_iters: int = DEFAULT_MAX_ITERS

    @model_validator(mode="after")
    def _check(self) -> "ScheduleConfig":
        if self.base_lr < 0 or self.warmup_iters < 0 or self.max_iters < 0:
            raise ValueError("schedule values must be non-negative")
        return self


class TrainingConfig(_Section):
    epochs: int = DEFAULT_EPOCHS
    batch_size: int = DEFAULT_BATCH_SIZE
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    beta1: float = DEFAULT_BETAS[0]
    beta2: float = DEFAULT_BETAS[1]
    adam_eps: float = DEFAULT_ADAM_EPS
    grad_clip: float = DEFAULT_GRAD_CLIP
    pretrain_epochs: int = DEFAULT_PRETRAIN_EPOCHS
    pretrain_lr: float = DEFAULT_PRETRAIN_LR
    pretrain_warmup: int = DEFAULT_PRETRAIN_WARMUP
    mask_ratio: float = DEFAULT_MASK_RATIO
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS

    @model_validator(mode="after")
    def _check(self) -> "TrainingConfig":
        if self.epochs < 0 or self.pretrain_epochs < 0:
            raise ValueError("epoch counts must be non-negative")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if not 0.0 < self.mask_ratio < 1.0:
            raise ValueError(f"mask_ratio must lie in (0, 1), got {self.mask_ratio}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        return self


class DataConfig(_Section):
    feature_class: str = DEFAULT_FEATURE_CLASS
    root: str = DEFAULT_DATA_ROOT
    train_count: int = DEFAULT_SPLIT_COUNTS[0]
    val_count: int = DEFAULT_SPLIT_COUNTS[1]
    test_count: int = DEFAULT_SPLIT_COUNTS[2]
    pretrain_count: int = DEFAULT_PRETRAIN_COUNT

    @model_validator(mode="after")
    def _check(self) -> "DataConfig":
        if self.feature_class not in ("railway", "vineyard"):
            raise ValueError(f"unknown feature class '{self.feature_class}'")
        if self.pretrain_count < 1:
            raise ValueError("pretrain_count must be at least 1")
        return self


class AblationFlags(_Section):
    """Component toggles; any of the 8 combinations is a valid model"""

    dora: bool = True
    semantic_prompt: bool = True
    masked_attention: bool = True


_SECTIONS = (
    ("encoder", EncoderConfig),
    ("adaptation", AdaptationConfig),
    ("prompt", PromptConfig),
    ("decoder", DecoderConfig),
    ("loss", LossConfig),
    ("schedule", ScheduleConfig),
    ("training", TrainingConfig),
    ("data", DataConfig),
    ("ablation", AblationFlags),
)


class RunConfig(_Section):
    """Complete configuration of one MapSAM run"""

    version: int = CONFIG_VERSION
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    adaptation: AdaptationConfig = Field(default_factory=AdaptationConfig)
    prompt: PromptConfig = Field(default_factory=PromptConfig)
    decoder: DecoderConfig = Field(default_factory=DecoderConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    ablation: AblationFlags = Field(default_factory=AblationFlags)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        """
        Build a validated config from nested section dictionaries

        Raises:
            ConfigError: if any value is invalid
        """
        try:
            config = cls.model_validate(dict(data))
        except ValidationError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
        if config.version != CONFIG_VERSION:
            raise ConfigError(
                f"config version {config.version} is not supported (expected {CONFIG_VERSION})"
            )
        return config

    @classmethod
    def from_ini_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError(f"cannot parse config file: {e}") from e
        data: Dict[str, Any] = {}
        if parser.has_option("DEFAULT", "version"):
            data["version"] = parser.get("DEFAULT", "version")
        known = {name for name, _ in _SECTIONS}
        for section in parser.sections():
            if section not in known:
                raise ConfigError(f"unknown config section [{section}]")
            data[section] = {key: value for key, value in parser.items(section) if key != "version"}
        return cls.from_dict(data)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        return cls.from_ini_text(text)

    def to_ini(self) -> str:
        """Serialize as `[section]` / `key = value` text; from_ini_text() reads it back unchanged"""
        lines = ["[DEFAULT]", f"version = {self.version}", ""]
        for name, _ in _SECTIONS:
            section = getattr(self, name)
            lines.append(f"[{name}]")
            for key, value in section.model_dump(by_alias=True).items():
                lines.append(f"{key} = {_format_value(value)}")
            lines.append("")
        return "\n".join(lines)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """
        Apply `section.key` overrides and re-validate

        Args:
            overrides: Mapping such as {"encoder.rank": "8", "training.seed": 3}

        Returns:
            New validated RunConfig
        """
        data = self.model_dump(by_alias=True)
        for dotted, value in overrides.items():
            section, _, key = dotted.partition(".")
            if section not in data or not isinstance(data[section], dict) or not key:
                raise ConfigError(f"unknown config key '{dotted}'")
            if key not in data[section]:
                raise ConfigError(f"unknown config key '{dotted}'")
            data[section][key] = value
        return RunConfig.from_dict(data)

    def snapshot(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolve_seed(flag_seed: Optional[int], config: RunConfig, file_sets_seed: bool) -> int:
    """
    Pick the run seed: explicit flag, then config file, then MAPSAM_SEED, then the default
    """
    if flag_seed is not None:
        return flag_seed
    if file_sets_seed:
        return config.training.seed
    env_value = os.environ.get(SEED_ENV_VAR)
    if env_value is not None and env_value.strip():
        try:
            return int(env_value)
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got '{env_value}'") from e
    return config.training.seed


def load_run_config(
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    seed: Optional[int] = None,
) -> RunConfig:
    """
    Load a run configuration from an optional file, then apply flag overrides

    Args:
        path: INI-style config file, or None for defaults
        overrides: `section.key` -> value pairs from the command line
        seed: --seed flag value if given

    Returns:
        Validated RunConfig
    """
    config = RunConfig.from_file(path) if path else RunConfig()
    file_sets_seed = False
    if path:
        parser = configparser.ConfigParser(interpolation=None)
        parser.read(path, encoding="utf-8")
        file_sets_seed = parser.has_option("training", "seed")
    if overrides:
        file_sets_seed = file_sets_seed or "training.seed" in overrides
        config = config.with_overrides(overrides)
    resolved = resolve_seed(seed, config, file_sets_seed)
    if resolved != config.training.seed:
        config = config.with_overrides({"training.seed": resolved})
    return config
