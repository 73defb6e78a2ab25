"""
规则引擎模块
"""
from .engine import (WeeklyDecision, apply_rules, decide_frames, decisions_frame, frame_weeks, labels_frame, replay,
                     run_semester)
from .table import ConflictRule, Guard, Overlay, RuleTable, expand_rule, load_overlay

__all__ = [
    'WeeklyDecision', 'apply_rules', 'decide_frames', 'decisions_frame', 'frame_weeks', 'labels_frame', 'replay',
    'run_semester',
    'ConflictRule', 'Guard', 'Overlay', 'RuleTable', 'expand_rule', 'load_overlay',
]
