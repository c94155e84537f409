"""
Training Package
Losses, AdamW, the warmup/poly schedule and the pretrain/finetune loop
"""

from .losses import LossReport, batch_loss, composite_loss, dice_loss, focal_loss, reconstruction_loss
from .optim import AdamW, clip_grad_norm, optimizer_step
from .pretrain import ReconstructionHead, mask_patches, pretrain_loss
from .schedule import Schedule, lr_at
from .trainer import EpochMetrics, LOG_FIELDS, ResumeState, TrainingResult, build_schedule, run_training

__all__ = [
    'LossReport',
    'batch_loss',
    'composite_loss',
    'dice_loss',
    'focal_loss',
    'reconstruction_loss',
    'AdamW',
    'clip_grad_norm',
    'optimizer_step',
    'ReconstructionHead',
    'mask_patches',
    'pretrain_loss',
    'Schedule',
    'lr_at',
    'EpochMetrics',
    'LOG_FIELDS',
    'ResumeState',
    'TrainingResult',
    'build_schedule',
    'run_training',
]
