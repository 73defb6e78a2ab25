"""
合成数据噪声
成绩延迟发布、课程代码笔误与漏写周记三类损坏，真值标签保持不变
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np

from domain.errors import InvalidConfig
from domain.grades import NOT_YET_POSTED, GradeStatus, StatusKind
from domain.records import CourseCatalog, StudentSemester, WeeklyReport
from ingestion.catalog import categorize_course

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NoiseConfig:
    """
    Attributes:
        late_posting: 每门课成绩整体推迟发布的概率
        late_posting_weeks: 推迟周数 k
        typo: 每门课代码出现笔误的概率
        skipped_journal: 每份已交周报漏写周记的概率
    """
    late_posting: float = 0.0
    late_posting_weeks: int = 1
    typo: float = 0.0
    skipped_journal: float = 0.0

    def __post_init__(self):
        for name in ('late_posting', 'typo', 'skipped_journal'):
            if not 0.0 <= float(getattr(self, name)) <= 1.0:
                raise InvalidConfig(f"{name} 必须在 [0, 1] 内")
        if int(self.late_posting_weeks) < 1:
            raise InvalidConfig("late_posting_weeks 必须 ≥ 1")

    @property
    def is_zero(self) -> bool:
        return self.late_posting == 0 and self.typo == 0 and self.skipped_journal == 0

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'NoiseConfig':
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def mutate_code(code: str, taken: Sequence[str], catalog: CourseCatalog, rng: np.random.Generator) -> str:
    """
    课程代码笔误：交换相邻两位数字，或把某一位数字加一

    结果保证不在课程目录中，也不与该生其他课程重名。
    """
    digits = [i for i, ch in enumerate(code) if ch.isdigit()]
    candidates = []
    for i, j in zip(digits, digits[1:]):
        if j == i + 1 and code[i] != code[j]:
            candidates.append(code[:i] + code[j] + code[i] + code[j + 1:])
    for i in digits:
        candidates.append(code[:i] + str((int(code[i]) + 1) % 10) + code[i + 1:])
    candidates = [c for c in dict.fromkeys(candidates) if c not in catalog and c not in taken]
    if not candidates:
        return code + 'X'
    return candidates[int(rng.integers(len(candidates)))]


def _shift_grades(reports: Sequence[WeeklyReport], code: str, k: int) -> List[GradeStatus]:
    """
    一门课的成绩推迟 k 周可见：第 w 周显示第 w-k 周（或更早最近一次）已报告的成绩，没有则为未出分
    退课与通过/不通过制状态不受影响
    """
    history = []
    shifted = []
    for report in reports:
        status = None if report.missing else report.status_of(code)
        history.append(status)
    for w, status in enumerate(history):
        if status is None or status.kind not in (StatusKind.REPORTED, StatusKind.NOT_YET_POSTED):
            shifted.append(status)
            continue
        visible = NOT_YET_POSTED
        for earlier in range(w - k, -1, -1):
            candidate = history[earlier]
            if candidate is not None and candidate.is_reported:
                visible = candidate
                break
        shifted.append(visible)
    return shifted


def _corrupt_student(semester: StudentSemester, noise: NoiseConfig, catalog: CourseCatalog,
                     rng: np.random.Generator) -> StudentSemester:
    codes = sorted({code for r in semester.reports for code in r.course_codes})
    late = {code for code in codes if rng.random() < noise.late_posting}
    renamed: Dict[str, str] = {}
    for code in codes:
        if rng.random() < noise.typo:
            renamed[code] = mutate_code(code, codes + list(renamed.values()), catalog, rng)

    shifted = {code: _shift_grades(semester.reports, code, noise.late_posting_weeks) for code in sorted(late)}
    reports = []
    for w, report in enumerate(semester.reports):
        if report.missing:
            reports.append(report)
            continue
        courses = []
        for code, status in report.courses:
            if code in shifted:
                status = shifted[code][w]
            courses.append((renamed.get(code, code), status))
        changes = {'courses': tuple(sorted(courses, key=lambda c: c[0]))}
        if report.has_journal and rng.random() < noise.skipped_journal:
            changes.update(journal_cs='', journal_noncs='', journal_personal='')
        reports.append(report.evolve(**changes))

    categories = {renamed.get(code, code): categorize_course(renamed.get(code, code), catalog) for code in codes}
    return StudentSemester(semester.student_id, semester.calendar, tuple(reports), categories)


def inject_noise(semesters: Sequence[StudentSemester], noise: NoiseConfig, catalog: CourseCatalog,
                 seed: int) -> List[StudentSemester]:
    """
    对语料施加噪声，返回新的学生学期列表（输入不变）

    每名学生使用 default_rng([seed, 学生序号, 1])；全部概率为 0 时原样返回。

    Args:
        semesters: 无噪声的学生学期
        noise: 噪声配置
        catalog: 课程目录（笔误代码重新分类用）
        seed: 主种子

    Returns:
        List[StudentSemester]: 加噪后的学生学期
    """
    if noise.is_zero:
        return list(semesters)
    corrupted = [_corrupt_student(s, noise, catalog, np.random.default_rng([seed, i, 1]))
                 for i, s in enumerate(semesters)]
    logger.info("已施加噪声 students=%d late_posting=%.2f typo=%.2f skipped_journal=%.2f",
                len(corrupted), noise.late_posting, noise.typo, noise.skipped_journal)
    return corrupted
