"""
定量特征提取
从整理后的学生学期计算 13 个成绩/缺交二值特征
"""
from typing import Dict, List, Optional, Sequence

import pandas as pd

from domain.codes import QuantFeatures
from domain.grades import B_MINUS, C_MINUS, CourseCategory, LetterGrade, StatusKind, grade_below
from domain.records import StudentSemester, WeeklyReport

# 特征矩阵中可选的缺交标记列
MISSING_COLUMN = 'report_missing'


def extract_quant(semester: StudentSemester) -> List[QuantFeatures]:
    """
    逐周计算定量特征

    - G1.x / G2.x 只在退课截止前一周 / 晚退课截止前一周判定
    - G3.x 只在期末周判定，使用每门在读课程最后一次报告的成绩
    - M1.x 按以本周结尾的连续缺交长度分档，M1.2 仅在晚退课截止周及之前
    - M2.x 为两个截止前一周的缺交

    Args:
        semester: 已消歧的学生学期

    Returns:
        List[QuantFeatures]: 长度为 final_week，第 i 项对应学期第 i+1 周
    """
    calendar = semester.calendar
    drop_window = calendar.drop_window_week
    late_window = calendar.late_drop_window_week
    final_flags = _final_grade_flags(semester)

    features = []
    run = 0
    for report in semester.reports:
        w = report.semester_week
        run = run + 1 if report.missing else 0
        flags: Dict[str, bool] = {}

        if report.missing:
            flags['M1.1'] = run == 1
            flags['M1.2'] = run == 2 and w <= calendar.late_drop_deadline_week
            flags['M1.3'] = run == 3
            flags['M1.4'] = run >= 4
            flags['M2.1'] = w == drop_window
            flags['M2.2'] = w == late_window
        else:
            if w == drop_window:
                flags['G1.1'], flags['G1.2'] = _window_flags(report)
            if w == late_window:
                flags['G2.1'], flags['G2.2'] = _window_flags(report)

        if w == calendar.final_week:
            flags.update(final_flags)
        features.append(QuantFeatures().with_flags(**flags))
    return features


def _window_flags(report: WeeklyReport):
    """(在读课程有低于 B- 的成绩, 在读课程有未出分)"""
    below = False
    pending = False
    for _, status in report.courses:
        if not status.is_active:
            continue
        if status.kind is StatusKind.REPORTED and grade_below(status.grade, B_MINUS):
            below = True
        elif status.kind is StatusKind.NOT_YET_POSTED:
            pending = True
    return below, pending


def _final_grade_flags(semester: StudentSemester) -> Dict[str, bool]:
    final_week = semester.calendar.final_week
    present = [r for r in semester.reports if not r.missing and r.semester_week <= final_week]
    if not present:
        return {}
    active = [code for code, status in present[-1].courses if status.is_active]
    final_grades: Dict[str, LetterGrade] = {}
    for code in active:
        grade = _last_reported(present, code)
        if grade is not None:
            final_grades[code] = grade

    stem = [g for code, g in final_grades.items() if semester.category_of(code) is CourseCategory.CS_TRACK_STEM]
    return {
        'G3.1': any(grade_below(g, B_MINUS) for g in final_grades.values()),
        'G3.2': any(grade_below(g, C_MINUS) for g in final_grades.values()),
        'G3.3': any(grade_below(g, C_MINUS) for g in stem),
    }


def _last_reported(reports: Sequence[WeeklyReport], code: str) -> Optional[LetterGrade]:
    for report in reversed(reports):
        status = report.status_of(code)
        if status is not None and status.is_reported:
            return status.grade
    return None


def flags_frame(semesters: Sequence[StudentSemester], per_week: Sequence[Sequence], codes,
                missing: bool = False) -> pd.DataFrame:
    """
    特征矩阵导出：每个学生-周一行，列为规范编码，取值 0/1

    Args:
        semesters: 学生学期列表
        per_week: 与 semesters 对齐的逐周标志（FlagSet）列表
        codes: 列编码顺序
        missing: 是否追加 report_missing 列（该周是否缺交）
    """
    rows = []
    for semester, weeks in zip(semesters, per_week):
        for week, flags in enumerate(weeks, start=1):
            row = {'student_id': semester.student_id, 'semester_week': week}
            row.update({code: int(flags[code]) for code in codes})
            if missing:
                row[MISSING_COLUMN] = int(semester.report(week).missing)
            rows.append(row)
    columns = ['student_id', 'semester_week'] + list(codes) + ([MISSING_COLUMN] if missing else [])
    return pd.DataFrame(rows, columns=columns)


def frame_to_flags(frame: pd.DataFrame, cls) -> Dict[str, List]:
    """flags_frame 的逆操作：学生编号 -> 按周排列的标志对象"""
    result: Dict[str, List] = {}
    for student_id, group in frame.groupby('student_id', sort=True):
        group = group.sort_values('semester_week')
        result[str(student_id)] = [cls.from_vector(row) for row in group[list(cls.CODES)].to_numpy()]
    return result


def frame_to_missing(frame: pd.DataFrame) -> Optional[Dict[str, List[bool]]]:
    """学生编号 -> 按周排列的缺交标记；矩阵没有 report_missing 列时返回 None"""
    if MISSING_COLUMN not in frame.columns:
        return None
    result: Dict[str, List[bool]] = {}
    for student_id, group in frame.groupby('student_id', sort=True):
        group = group.sort_values('semester_week')
        result[str(student_id)] = [bool(v) for v in group[MISSING_COLUMN].to_numpy()]
    return result
