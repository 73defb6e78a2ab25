"""
方法对比
规则引擎与各机器学习模型在同一标注语料上的微平均指标、置信区间与逐干预明细
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from domain.codes import INTERVENTION_CODES
from .metrics import METRIC_NAMES, ConfidenceInterval, Key, Metrics, MetricsReport

logger = logging.getLogger(__name__)

METHOD_LABELS = {
    'rule_engine': 'Rule-based',
    'cart': 'CART',
    'forest': 'Random Forest',
    'mlp': 'MLP',
}


def split_students(students: Sequence[str], test_fraction: float, seed: int) -> Tuple[List[str], List[str]]:
    """
    按学生划分训练/留出集合（同一学生的所有周落在同一侧）

    Args:
        students: 学生编号
        test_fraction: 留出比例
        seed: 随机种子

    Returns:
        Tuple[List[str], List[str]]: 排序后的训练学生与留出学生
    """
    ordered = sorted(set(students))
    if len(ordered) < 2 or test_fraction <= 0:
        return ordered, []
    n_test = min(len(ordered) - 1, max(1, int(round(test_fraction * len(ordered)))))
    order = np.random.default_rng(seed).permutation(len(ordered))
    test = sorted(ordered[i] for i in order[:n_test])
    held = set(test)
    return [s for s in ordered if s not in held], test


@dataclass(frozen=True)
class MethodEvaluation:
    """一个方法的评估结果"""
    method: str
    report: MetricsReport
    per_intervention: Dict[str, MetricsReport]
    intervals: Dict[str, ConfidenceInterval] = field(default_factory=dict)

    def row(self) -> Dict[str, Any]:
        row = {'method': METHOD_LABELS.get(self.method, self.method)}
        for name in METRIC_NAMES:
            row[name] = self.report.value(name)
        for name in METRIC_NAMES:
            ci = self.intervals.get(name)
            row[f'{name}_ci'] = ci.half_width if ci is not None else float('nan')
        row.update(self.report.counts.to_dict())
        return row

    def to_dict(self) -> Dict[str, Any]:
        return {
            'method': self.method,
            'micro': self.report.to_dict(),
            'intervals': {name: ci.to_dict() for name, ci in self.intervals.items()},
            'per_intervention': {code: r.to_dict() for code, r in self.per_intervention.items()},
        }


def evaluate_matrix(method: str, predicted: np.ndarray, truth: np.ndarray, keys: Sequence[Key],
                    level: float = 0.90, resamples: int = 1000, seed: int = 42) -> MethodEvaluation:
    """
    评估一个 (n, 23) 预测矩阵

    学生少于 2 人时不计算置信区间。
    """
    table = Metrics.confusion_arrays(predicted, truth)
    report = Metrics.metrics(table.micro)
    per = {code: Metrics.metrics(counts, scope=code) for code, counts in table.per_intervention.items()}
    per_student = Metrics.per_student_counts(predicted, truth, keys)
    intervals = {}
    if len(per_student) >= 2:
        intervals = Metrics.bootstrap_ci(per_student, level, resamples, seed)
    else:
        logger.warning("学生不足 2 人，跳过置信区间 method=%s", method)
    logger.info("评估完成 method=%s accuracy=%.4f precision=%.4f recall=%.4f f1=%.4f",
                method, report.accuracy, report.precision, report.recall, report.f1)
    return MethodEvaluation(method, report, per, intervals)


@dataclass
class ComparisonResult:
    evaluations: List[MethodEvaluation]

    def table(self) -> pd.DataFrame:
        """每个方法一行：四项微平均指标、置信区间半宽与混淆计数"""
        columns = (['method'] + list(METRIC_NAMES) + [f'{n}_ci' for n in METRIC_NAMES]
                   + ['tp', 'tn', 'fp', 'fn'])
        return pd.DataFrame([e.row() for e in self.evaluations], columns=columns)

    def per_intervention(self, metric: str = 'f1') -> pd.DataFrame:
        """逐干预指标：行为干预，列为方法"""
        data = {METHOD_LABELS.get(e.method, e.method): [e.per_intervention[c].value(metric) for c in INTERVENTION_CODES]
                for e in self.evaluations}
        return pd.DataFrame(data, index=list(INTERVENTION_CODES))

    def to_dict(self) -> Dict[str, Any]:
        return {'methods': [e.to_dict() for e in self.evaluations]}

    def save(self, table_path: str, report_path: str, breakdown_path: Optional[str] = None):
        self.table().to_csv(table_path, sep='\t', index=False, float_format='%.6f')
        with open(report_path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(self.to_dict(), f, sort_keys=True, indent=1)
            f.write('\n')
        if breakdown_path:
            self.per_intervention().to_csv(breakdown_path, sep='\t', index_label='intervention',
                                           float_format='%.6f')

    def format(self) -> str:
        """按百分比排版的对比表，供标准输出打印"""
        lines = [f"{'Method':<16}{'Accuracy':>16}{'Precision':>16}{'Recall':>16}{'F1':>16}"]
        for e in self.evaluations:
            cells = []
            for name in METRIC_NAMES:
                value = 100 * e.report.value(name)
                ci = e.intervals.get(name)
                cells.append(f"{value:6.2f}% ±{100 * ci.half_width:4.2f}" if ci else f"{value:6.2f}%")
            lines.append(f"{METHOD_LABELS.get(e.method, e.method):<16}" + ''.join(f"{c:>16}" for c in cells))
        return '\n'.join(lines)


def compare_predictors(predictions: Mapping[str, np.ndarray], truth: np.ndarray, keys: Sequence[Key],
                       level: float = 0.90, resamples: int = 1000, seed: int = 42) -> ComparisonResult:
    """
    多方法对比

    Args:
        predictions: 方法名 -> (n, 23) 预测矩阵（规则引擎与各模型），行序与 keys 一致
        truth: (n, 23) 真值矩阵
        keys: 每行的 (学生, 周)
        level / resamples / seed: 置信区间参数

    Returns:
        ComparisonResult: 按输入顺序排列的评估结果
    """
    evaluations = [evaluate_matrix(method, matrix, truth, keys, level, resamples, seed)
                   for method, matrix in predictions.items()]
    return ComparisonResult(evaluations)
