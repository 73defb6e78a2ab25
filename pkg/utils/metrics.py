"""
干预推荐评估指标
混淆计数、准确率/精确率/召回率/F1 以及按学生重采样的自助法置信区间
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from domain.codes import INTERVENTION_CODES, InterventionSet
from domain.errors import InsufficientUnits, InvalidConfig, KeyMismatch

logger = logging.getLogger(__name__)

METRIC_NAMES = ('accuracy', 'precision', 'recall', 'f1')
Key = Tuple[str, int]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError(f"混淆计数不能为负: {self}")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: 'ConfusionCounts') -> 'ConfusionCounts':
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)

    def as_array(self) -> np.ndarray:
        return np.array([self.tp, self.tn, self.fp, self.fn], dtype=float)

    @classmethod
    def from_arrays(cls, predicted: np.ndarray, truth: np.ndarray) -> 'ConfusionCounts':
        p = np.asarray(predicted).astype(bool)
        t = np.asarray(truth).astype(bool)
        return cls(int(np.sum(p & t)), int(np.sum(~p & ~t)), int(np.sum(p & ~t)), int(np.sum(~p & t)))

    def to_dict(self) -> Dict[str, int]:
        return {'tp': self.tp, 'tn': self.tn, 'fp': self.fp, 'fn': self.fn}


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts
    scope: str = 'micro'

    def value(self, name: str) -> float:
        return float(getattr(self, name))

    def to_dict(self) -> Dict[str, Any]:
        d = {name: self.value(name) for name in METRIC_NAMES}
        d.update(self.counts.to_dict())
        d['scope'] = self.scope
        return d


@dataclass(frozen=True)
class GroundTruthRecord:
    """一个学生-周的标注干预"""
    student_id: str
    semester_week: int
    labeled_interventions: InterventionSet
    labeler: str = 'rule_engine'

    @property
    def key(self) -> Key:
        return (self.student_id, self.semester_week)


@dataclass(frozen=True)
class ConfusionTable:
    """逐干预计数与微平均总计"""
    per_intervention: Dict[str, ConfusionCounts]
    micro: ConfusionCounts


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    point: float
    level: float

    @property
    def half_width(self) -> float:
        return (self.upper - self.lower) / 2.0

    def to_dict(self) -> Dict[str, float]:
        return {'lower': self.lower, 'upper': self.upper, 'point': self.point, 'level': self.level}


def _label_map(records: Iterable[Any]) -> Dict[Key, InterventionSet]:
    """WeeklyDecision 或 GroundTruthRecord 序列 -> {(学生, 周): 干预集合}"""
    result = {}
    for record in records:
        labels = getattr(record, 'labeled_interventions', None)
        if labels is None:
            labels = record.interventions
        result[(record.student_id, record.semester_week)] = labels
    return result


def _rates(counts: np.ndarray) -> np.ndarray:
    """
    批量计算四项指标

    Args:
        counts: (..., 4) 数组，列顺序 tp, tn, fp, fn

    Returns:
        np.ndarray: (..., 4) 数组，列顺序 accuracy, precision, recall, f1
    """
    tp, tn, fp, fn = (counts[..., i] for i in range(4))
    total = tp + tn + fp + fn
    with np.errstate(divide='ignore', invalid='ignore'):
        accuracy = np.where(total > 0, (tp + tn) / np.where(total > 0, total, 1), 0.0)
        precision = np.where(tp + fp > 0, tp / np.where(tp + fp > 0, tp + fp, 1), 0.0)
        recall = np.where(tp + fn > 0, tp / np.where(tp + fn > 0, tp + fn, 1), 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / np.where(pr > 0, pr, 1), 0.0)
    return np.stack([accuracy, precision, recall, f1], axis=-1)


class Metrics:
    """多标签干预推荐的评估指标（微平均、逐干预与置信区间）"""

    @staticmethod
    def confusion_arrays(predicted: np.ndarray, truth: np.ndarray,
                         label_names: Sequence[str] = INTERVENTION_CODES) -> ConfusionTable:
        """
        两个 (n, 23) 的 0/1 矩阵逐格比较

        Returns:
            ConfusionTable: 逐干预计数与微平均总计（总计等于逐干预之和）
        """
        predicted = np.asarray(predicted)
        truth = np.asarray(truth)
        if predicted.shape != truth.shape:
            raise ValueError(f"预测矩阵 {predicted.shape} 与真值矩阵 {truth.shape} 形状不一致")
        per = {code: ConfusionCounts.from_arrays(predicted[:, t], truth[:, t])
               for t, code in enumerate(label_names)}
        micro = ConfusionCounts()
        for counts in per.values():
            micro = micro + counts
        return ConfusionTable(per, micro)

    @staticmethod
    def confusion(predictions: Sequence[Any], truth: Sequence[GroundTruthRecord]) -> ConfusionTable:
        """
        决策与真值按 (学生, 周) 对齐后，对 23 个干预逐格比较

        Args:
            predictions: WeeklyDecision（或任何带 interventions 的记录）
            truth: 标注记录

        Returns:
            ConfusionTable: 逐干预计数与微平均总计

        Raises:
            KeyMismatch: 两侧键集合不同
        """
        predicted = _label_map(predictions)
        expected = _label_map(truth)
        missing = sorted(set(expected) - set(predicted))
        extra = sorted(set(predicted) - set(expected))
        if missing or extra:
            raise KeyMismatch(missing, extra)
        keys = sorted(expected)
        P = np.array([predicted[k].to_vector() for k in keys]).reshape(-1, len(INTERVENTION_CODES))
        T = np.array([expected[k].to_vector() for k in keys]).reshape(-1, len(INTERVENTION_CODES))
        return Metrics.confusion_arrays(P, T)

    @staticmethod
    def metrics(counts: ConfusionCounts, scope: str = 'micro') -> MetricsReport:
        """
        由混淆计数计算四项指标

        precision 在 tp+fp=0 时取 0；recall 在 tp+fn=0 时取 0；两者皆 0 时 f1 取 0。
        """
        if counts.total <= 0:
            raise ValueError("混淆计数总数必须大于 0")
        accuracy, precision, recall, f1 = (float(x) for x in _rates(counts.as_array()))
        return MetricsReport(accuracy, precision, recall, f1, counts, scope)

    @staticmethod
    def per_student_counts(predicted: np.ndarray, truth: np.ndarray, keys: Sequence[Key]) -> Dict[str, ConfusionCounts]:
        """每个学生所有周、所有干预的汇总计数"""
        predicted = np.asarray(predicted).astype(bool)
        truth = np.asarray(truth).astype(bool)
        students = np.array([student for student, _ in keys])
        result = {}
        for student in sorted(set(students.tolist())):
            rows = students == student
            result[student] = ConfusionCounts.from_arrays(predicted[rows], truth[rows])
        return result

    @staticmethod
    def bootstrap_ci(per_student: Mapping[str, Union[ConfusionCounts, MetricsReport]], level: float = 0.90,
                     resamples: int = 1000, seed: int = 42) -> Dict[str, ConfidenceInterval]:
        """
        按学生有放回重采样的百分位自助法置信区间

        每次重采样使用由主种子派生的独立生成器；端点取经验分布的下/上次序统计量，
        并在必要时扩展以包含点估计。

        Args:
            per_student: 学生 -> 混淆计数（或带计数的指标报告）
            level: 置信水平
            resamples: 重采样次数（≥ 100）
            seed: 主种子

        Returns:
            Dict[str, ConfidenceInterval]: 每项指标的区间

        Raises:
            InsufficientUnits: 学生少于 2 人
        """
        if len(per_student) < 2:
            raise InsufficientUnits(f"自助法至少需要 2 名学生, 实际 {len(per_student)}")
        if resamples < 100:
            raise InvalidConfig(f"重采样次数至少 100: {resamples}")
        if not 0 < level < 1:
            raise InvalidConfig(f"置信水平必须在 (0, 1) 内: {level}")

        students = sorted(per_student)
        units = np.stack([
            (per_student[s].counts if isinstance(per_student[s], MetricsReport) else per_student[s]).as_array()
            for s in students
        ])
        n = len(students)
        children = np.random.SeedSequence(seed).spawn(resamples)
        pooled = np.empty((resamples, 4))
        for r, child in enumerate(children):
            picks = np.random.default_rng(child).integers(0, n, size=n)
            pooled[r] = units[picks].sum(axis=0)
        stats = _rates(pooled)
        point = _rates(units.sum(axis=0))

        alpha = (1.0 - level) / 2.0
        intervals = {}
        for i, name in enumerate(METRIC_NAMES):
            lower = float(np.percentile(stats[:, i], 100 * alpha, method='lower'))
            upper = float(np.percentile(stats[:, i], 100 * (1 - alpha), method='higher'))
            p = float(point[i])
            intervals[name] = ConfidenceInterval(min(lower, p), max(upper, p), p, level)
        logger.debug("自助法置信区间 students=%d resamples=%d f1=[%.4f, %.4f]",
                     n, resamples, intervals['f1'].lower, intervals['f1'].upper)
        return intervals

    @staticmethod
    def save_metrics_to_tsv(rows: Mapping[str, Mapping[str, Any]], filename: str):
        """
        保存指标到 TSV 文件

        Args:
            rows: 方法名到指标字典的映射
            filename: 保存的文件名
        """
        data = []
        for method, values in rows.items():
            row = {'method': method}
            row.update(values)
            data.append(row)
        pd.DataFrame(data).to_csv(filename, sep='\t', index=False, float_format='%.6f')


# ---------------------------------------------------------------------- 标注文件

def truth_from_decisions(decisions: Sequence[Any], labeler: str = 'rule_engine') -> List[GroundTruthRecord]:
    return [GroundTruthRecord(d.student_id, d.semester_week, d.interventions, labeler) for d in decisions]


def truth_from_frame(frame: pd.DataFrame, labeler: str = 'rule_engine') -> List[GroundTruthRecord]:
    """标签矩阵（student_id, semester_week + 23 列 0/1）-> 标注记录"""
    missing = [code for code in INTERVENTION_CODES if code not in frame.columns]
    if missing:
        raise InvalidConfig(f"标签文件缺少干预列: {missing}")
    records = []
    has_labeler = 'labeler' in frame.columns
    # 干预列名含点号，不能用 itertuples
    for values in frame.to_dict('records'):
        labels = InterventionSet.from_codes(code for code in INTERVENTION_CODES if int(values[code]) == 1)
        records.append(GroundTruthRecord(str(values['student_id']), int(values['semester_week']), labels,
                                         str(values['labeler']) if has_labeler else labeler))
    return records


def load_labels(path: str, labeler: str = 'rule_engine') -> List[GroundTruthRecord]:
    frame = pd.read_csv(path, sep='\t', dtype={'student_id': str})
    return truth_from_frame(frame, labeler)


def truth_matrix(records: Sequence[GroundTruthRecord], keys: Sequence[Key]) -> np.ndarray:
    """
    按给定键顺序排列的 (n, 23) 真值矩阵

    Raises:
        KeyMismatch: 键集合不同
    """
    by_key = {r.key: r.labeled_interventions for r in records}
    wanted = set(keys)
    missing = sorted(wanted - set(by_key))
    extra = sorted(set(by_key) - wanted)
    if missing or extra:
        raise KeyMismatch(missing, extra)
    return np.array([by_key[k].to_vector() for k in keys]).reshape(-1, len(INTERVENTION_CODES))
