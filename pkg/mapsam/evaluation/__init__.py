"""
Evaluation Package
IoU/F1 metrics, split evaluation and result tables
"""

from .evaluator import EvaluationReport, TileResult, evaluate, predict_mask
from .metrics import ConfusionCounts, confusion, f1, iou
from .report_builder import ReportBuilder

__all__ = [
    'EvaluationReport',
    'TileResult',
    'evaluate',
    'predict_mask',
    'ConfusionCounts',
    'confusion',
    'f1',
    'iou',
    'ReportBuilder',
]
