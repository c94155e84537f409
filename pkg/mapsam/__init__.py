"""
MapSAM Package
DoRA-adapted ViT segmentation with automatic positional-semantic prompts and a masked-attention decoder
"""

from .checkpoint import Checkpoint, build_checkpoint, load_checkpoint, restore_model, save_checkpoint
from .config import RunConfig, load_run_config
from .errors import (
    CheckpointError,
    ConfigError,
    DataError,
    MapSAMError,
    NumericError,
    OptimizerError,
    PromptError,
    ShapeError,
    SingularityError,
    TapeError,
)
from .model import ForwardResult, MapSAM

__all__ = [
    'Checkpoint',
    'build_checkpoint',
    'load_checkpoint',
    'restore_model',
    'save_checkpoint',
    'RunConfig',
    'load_run_config',
    'CheckpointError',
    'ConfigError',
    'DataError',
    'MapSAMError',
    'NumericError',
    'OptimizerError',
    'PromptError',
    'ShapeError',
    'SingularityError',
    'TapeError',
    'ForwardResult',
    'MapSAM',
]
