"""
Supervisor Package
Run validation, stage workflow and multi-seed experiment orchestration
"""

from .data_validator import RunValidator
from .supervisor import ABLATION_VARIANTS, AblationResult, ExperimentSupervisor, TapSweepResult, tap_sweep_sets
from .workflow_manager import StageOutcome, WorkflowManager

__all__ = [
    'RunValidator',
    'ABLATION_VARIANTS',
    'AblationResult',
    'ExperimentSupervisor',
    'TapSweepResult',
    'tap_sweep_sets',
    'StageOutcome',
    'WorkflowManager',
]
