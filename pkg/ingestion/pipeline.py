"""
读取流水线：解析 -> 周对齐 -> 补齐缺交周 -> 成绩状态消歧
以及整理后语料的落盘
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import List, Sequence

import pandas as pd

from domain.codec import decode_semester, encode_semester
from domain.errors import DuplicateWeek, UnmappedWeek
from domain.records import AcademicCalendar, CourseCatalog, StudentSemester
from .alignment import align_weeks, build_student_semester, group_by_student, resolve_semester
from .reports import IngestIssue, parse_reports

logger = logging.getLogger(__name__)

ISSUE_COLUMNS = ['severity', 'kind', 'student_id', 'row', 'week', 'message']


@dataclass
class IngestResult:
    """整理好的学生学期与全部问题记录"""
    semesters: List[StudentSemester] = field(default_factory=list)
    issues: List[IngestIssue] = field(default_factory=list)

    @property
    def has_errors(self) -> bool:
        return any(issue.is_error for issue in self.issues)


def ingest_file(path: str, calendar: AcademicCalendar, catalog: CourseCatalog,
                delimiter: str = '\t', keep_latest: bool = False) -> IngestResult:
    """
    读取一个周报文件并整理为学生学期序列

    行级错误不中断处理：格式错误的行被跳过，无法映射的周报被跳过，
    存在重复周的学生整体被跳过（除非 keep_latest），全部记录在 issues 中。

    Args:
        path: 周报文件
        calendar: 校历
        catalog: 课程目录
        delimiter: 分隔符
        keep_latest: 重复周保留较晚的提交

    Returns:
        IngestResult: 学生学期（按学生编号排序）与问题列表
    """
    result = IngestResult()
    parsed = parse_reports(path, delimiter)
    for error in parsed.errors:
        result.issues.append(IngestIssue('error', 'ParseError', '', error.row, None, error.reason))
    for warning in parsed.warnings:
        result.issues.append(IngestIssue('warning', 'MismatchWarning', warning.student_id, warning.row,
                                         None, warning.reason))

    aligned = []
    for report in parsed.reports:
        try:
            aligned.extend(align_weeks([report], calendar))
        except UnmappedWeek as exc:
            result.issues.append(IngestIssue('error', 'UnmappedWeek', report.student_id, report.source_row,
                                             exc.report_week, str(exc)))

    for student_id, reports in group_by_student(aligned).items():
        try:
            semester = build_student_semester(reports, calendar, keep_latest, result.issues)
        except DuplicateWeek as exc:
            result.issues.append(IngestIssue('error', 'DuplicateWeek', student_id, None,
                                             exc.semester_week, str(exc)))
            continue
        result.semesters.append(resolve_semester(semester, catalog))

    errors = sum(1 for issue in result.issues if issue.is_error)
    logger.info("读取完成 file=%s students=%d issues=%d errors=%d", path, len(result.semesters),
                len(result.issues), errors)
    return result


def write_issues(path: str, issues: Sequence[IngestIssue]):
    """问题报告（即使为空也写出表头）"""
    frame = pd.DataFrame([asdict(issue) for issue in issues], columns=ISSUE_COLUMNS)
    frame['row'] = frame['row'].astype('Int64')
    frame['week'] = frame['week'].astype('Int64')
    frame.to_csv(path, sep='\t', index=False, encoding='utf-8')


def save_semesters(path: str, semesters: Sequence[StudentSemester]):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump([encode_semester(s) for s in semesters], f, ensure_ascii=False, sort_keys=True, indent=1)


def load_semesters(path: str) -> List[StudentSemester]:
    with open(path, 'r', encoding='utf-8') as f:
        return [decode_semester(item) for item in json.load(f)]
