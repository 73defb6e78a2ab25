"""
机器学习输入编码
特征向量 28 维 = [学期周 / 期末周] + 13 个定量特征 + 14 个定性特征
标签向量 23 维，按干预规范顺序
"""
import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from domain.codes import INTERVENTION_CODES, QUAL_CODES, QUANT_CODES, InterventionSet, QualFeatures, QuantFeatures
from domain.errors import EmptyDataset
from domain.records import AcademicCalendar

FEATURE_NAMES: Tuple[str, ...] = ('week',) + QUANT_CODES + QUAL_CODES
LABEL_NAMES: Tuple[str, ...] = INTERVENTION_CODES
N_FEATURES = len(FEATURE_NAMES)
N_LABELS = len(LABEL_NAMES)


def feature_index_map() -> Dict[str, int]:
    return {name: i for i, name in enumerate(FEATURE_NAMES)}


@dataclass(frozen=True)
class EncodedSample:
    """
    一个学生-周的编码样本

    Attributes:
        features: 长度 28 的实数向量
        labels: 长度 23 的 0/1 向量（推理时全 0）
        student_id / semester_week: 样本键
        feature_names: 特征顺序
    """
    features: np.ndarray
    labels: np.ndarray
    student_id: str = ''
    semester_week: int = 0
    feature_names: Tuple[str, ...] = FEATURE_NAMES


def encode(week: int, calendar: AcademicCalendar, quant: QuantFeatures, qual: QualFeatures,
           decision: Optional[InterventionSet] = None, student_id: str = '') -> EncodedSample:
    """
    编码一个学生-周

    Args:
        week: 学期周（1..final_week）
        calendar: 校历
        quant: 定量特征
        qual: 定性特征
        decision: 标签干预集合，推理时为 None
        student_id: 学生编号

    Returns:
        EncodedSample: 编码样本
    """
    if not 1 <= week <= calendar.final_week:
        raise ValueError(f"学期周 {week} 超出 1..{calendar.final_week}")
    features = np.concatenate([[week / calendar.final_week], quant.to_vector(), qual.to_vector()])
    labels = decision.to_vector() if decision is not None else np.zeros(N_LABELS)
    return EncodedSample(features, labels, student_id, week)


@dataclass
class Dataset:
    """
    训练/评估数据集

    Attributes:
        X: (n, 28) 特征矩阵
        Y: (n, 23) 标签矩阵
        keys: 每行的 (学生编号, 学期周)
    """
    X: np.ndarray
    Y: np.ndarray
    keys: List[Tuple[str, int]] = field(default_factory=list)
    feature_names: Tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, N_FEATURES)
        self.Y = np.asarray(self.Y, dtype=float).reshape(-1, N_LABELS)
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError(f"特征 {self.X.shape[0]} 行与标签 {self.Y.shape[0]} 行不一致")
        if not self.keys:
            self.keys = [('', i) for i in range(self.X.shape[0])]

    @classmethod
    def from_samples(cls, samples: Sequence[EncodedSample]) -> 'Dataset':
        if not samples:
            raise EmptyDataset("没有样本")
        return cls(np.stack([s.features for s in samples]), np.stack([s.labels for s in samples]),
                   [(s.student_id, s.semester_week) for s in samples])

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, rows: Sequence[int]) -> 'Dataset':
        rows = list(rows)
        return Dataset(self.X[rows], self.Y[rows], [self.keys[i] for i in rows], self.feature_names)

    def students(self) -> List[str]:
        return sorted({student for student, _ in self.keys})

    def select_students(self, students: Sequence[str]) -> 'Dataset':
        wanted = set(students)
        return self.subset([i for i, (student, _) in enumerate(self.keys) if student in wanted])

    def digest(self) -> str:
        """数据集 SHA-256（特征、标签与键）"""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X, dtype='<f8').tobytes())
        h.update(np.ascontiguousarray(self.Y, dtype='<f8').tobytes())
        h.update('\n'.join(f"{s}\t{w}" for s, w in self.keys).encode('utf-8'))
        return h.hexdigest()


def dataset_from_frames(quant: pd.DataFrame, qual: pd.DataFrame, calendar: AcademicCalendar,
                        labels: Optional[pd.DataFrame] = None) -> Dataset:
    """
    由特征矩阵文件（与可选的标签文件）拼出数据集，按 (学生, 周) 排序

    Args:
        quant: student_id, semester_week + 13 列（可带 report_missing 列，此处不使用）
        qual: student_id, semester_week + 14 列
        calendar: 校历（周缩放）
        labels: student_id, semester_week + 23 列；缺省时标签全 0
    """
    keys = ['student_id', 'semester_week']
    frame = quant.merge(qual, on=keys, how='inner', validate='one_to_one')
    if labels is not None:
        frame = frame.merge(labels, on=keys, how='inner', validate='one_to_one')
    if frame.empty:
        raise EmptyDataset("特征文件没有可对齐的行")
    frame = frame.sort_values(keys, kind='mergesort').reset_index(drop=True)
    week = frame['semester_week'].to_numpy(dtype=float) / calendar.final_week
    X = np.column_stack([week, frame[list(QUANT_CODES + QUAL_CODES)].to_numpy(dtype=float)])
    Y = frame[list(LABEL_NAMES)].to_numpy(dtype=float) if labels is not None else np.zeros((len(frame), N_LABELS))
    return Dataset(X, Y, [(str(s), int(w)) for s, w in zip(frame['student_id'], frame['semester_week'])])
