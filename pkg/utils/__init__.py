"""
工具模块
包含评估指标、方法对比、可视化、运行清单与日志配置
"""
from .comparison import ComparisonResult, MethodEvaluation, compare_predictors, evaluate_matrix, split_students
from .logger import setup_logging
from .manifest import build_manifest, file_sha256, write_manifest
from .metrics import (ConfidenceInterval, ConfusionCounts, ConfusionTable, GroundTruthRecord, Metrics,
                      MetricsReport, load_labels, truth_from_decisions, truth_from_frame, truth_matrix)
from .visualizer import Visualizer

__all__ = [
    'ComparisonResult', 'MethodEvaluation', 'compare_predictors', 'evaluate_matrix', 'split_students',
    'setup_logging',
    'build_manifest', 'file_sha256', 'write_manifest',
    'ConfidenceInterval', 'ConfusionCounts', 'ConfusionTable', 'GroundTruthRecord', 'Metrics',
    'MetricsReport', 'load_labels', 'truth_from_decisions', 'truth_from_frame', 'truth_matrix',
    'Visualizer',
]
