"""
周报文件解析
UTF-8 分隔文本，表头必需，课程列以 course_N / grade_N 成对出现
"""
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import pandas as pd

from domain.errors import ParseError, UnknownCode
from domain.grades import NOT_YET_POSTED, PASS_FAIL, GradeStatus, LetterGrade, StatusKind
from domain.records import WeeklyReport
from .catalog import normalize_course_code

logger = logging.getLogger(__name__)

JOURNAL_COLUMNS = ('journal_cs', 'journal_noncs', 'journal_personal')
REQUIRED_COLUMNS = ('student_id', 'report_week') + JOURNAL_COLUMNS

PASS_FAIL_MARKERS = frozenset({'P', 'S', 'U', 'PASS', 'FAIL'})

_COURSE_COLUMN = re.compile(r'^course_(\d+)$')
_REJECTED_MARKER = '\x00rejected:'


@dataclass(frozen=True)
class MismatchWarning:
    """周报内容不一致但仍可使用的行"""
    row: int
    student_id: str
    reason: str


@dataclass(frozen=True)
class IngestIssue:
    """
    读取过程中记录的一条问题（写入 issues.tsv）

    Attributes:
        severity: "error" 或 "warning"
        kind: 问题类型（ParseError、UnmappedWeek、DuplicateWeek、MismatchWarning ...）
        student_id: 相关学生（未知时为空）
        row: 源文件数据行号（未知时为 None）
        week: 相关周（未知时为 None）
        message: 说明
    """
    severity: str
    kind: str
    student_id: str
    row: Optional[int]
    week: Optional[int]
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity == 'error'


@dataclass
class ParseResult:
    """
    部分成功的解析结果

    Attributes:
        reports: 成功解析的原始周报（尚未对齐）
        errors: 格式错误的行
        warnings: 可用但可疑的行
    """
    reports: List[WeeklyReport] = field(default_factory=list)
    errors: List[ParseError] = field(default_factory=list)
    warnings: List[MismatchWarning] = field(default_factory=list)


def clean_text(value: str) -> str:
    """
    去除不可见字符

    控制字符（含制表符、换行）与不换行空格替换为空格，零宽字符、BOM 等格式字符直接删除，
    最后压缩连续空白。
    """
    chars = []
    for ch in value:
        category = unicodedata.category(ch)
        if category == 'Cc' or category == 'Zs':
            chars.append(' ')
        elif category == 'Cf':
            continue
        else:
            chars.append(ch)
    return ' '.join(''.join(chars).split())


def parse_grade_cell(text: str) -> GradeStatus:
    """
    解析一个成绩单元格（已清洗）

    空单元格先记为 NotYetPosted，真实含义由成绩状态消歧步骤确定。
    """
    if not text:
        return NOT_YET_POSTED
    if text.upper() in PASS_FAIL_MARKERS:
        return PASS_FAIL
    return GradeStatus.reported(LetterGrade.parse(text))


def _course_pairs(columns: Sequence[str]) -> List[int]:
    indices = []
    for column in columns:
        match = _COURSE_COLUMN.match(column)
        if match and f'grade_{match.group(1)}' in columns:
            indices.append(int(match.group(1)))
    return sorted(indices)


def parse_reports(path: str, delimiter: str = '\t') -> ParseResult:
    """
    读取周报文件

    行号为表头之后的数据行序号（文件第 2 行记为第 1 行），空行与被拒绝的行同样占用行号。
    字段数多于或少于表头的行记为该行的 ParseError，其余行照常解析。

    Args:
        path: 文件路径
        delimiter: 分隔符（默认制表符）

    Returns:
        ParseResult: 成功行、错误行与警告行

    Raises:
        ParseError: 表头缺少必需列（整文件无法解析）
    """
    result = ParseResult()
    header = pd.read_csv(path, sep=delimiter, dtype=str, nrows=0, encoding='utf-8-sig', engine='python')
    width = len(header.columns)
    rejected: List[List[str]] = []

    def on_bad_line(fields: List[str]) -> List[str]:
        # 原位保留占位行，后续行号不偏移
        rejected.append(fields)
        return [f'{_REJECTED_MARKER}{len(rejected) - 1}'] + [''] * (width - 1)

    frame = pd.read_csv(path, sep=delimiter, dtype=str, keep_default_na=False, encoding='utf-8-sig',
                        engine='python', on_bad_lines=on_bad_line, skip_blank_lines=False, index_col=False)
    frame.columns = [clean_text(str(c)).lower() for c in frame.columns]
    missing_columns = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing_columns:
        raise ParseError(0, f"表头缺少列: {', '.join(missing_columns)}")

    pairs = _course_pairs(list(frame.columns))
    for index, values in enumerate(frame.itertuples(index=False, name=None), start=1):
        cells = [None if pd.isna(v) else str(v) for v in values]
        if all(not c for c in cells):
            continue
        first = cells[0] or ''
        if first.startswith(_REJECTED_MARKER):
            fields = rejected[int(first[len(_REJECTED_MARKER):])]
            result.errors.append(ParseError(index, f"字段数 {len(fields)} 多于表头的 {width}: "
                                                   f"{delimiter.join(fields)[:60]!r}"))
            continue
        if any(c is None for c in cells):
            present = sum(c is not None for c in cells)
            result.errors.append(ParseError(index, f"字段数 {present} 少于表头的 {width}"))
            continue
        try:
            report, warning = _parse_row(index, dict(zip(frame.columns, cells)), pairs)
        except ParseError as exc:
            result.errors.append(exc)
            continue
        result.reports.append(report)
        if warning:
            result.warnings.append(warning)

    for error in result.errors:
        logger.warning("周报行解析失败 row=%s reason=%s", error.row, error.reason)
    logger.info("周报解析完成 file=%s rows=%d errors=%d warnings=%d", path,
                len(result.reports), len(result.errors), len(result.warnings))
    return result


def _parse_row(row: int, record: Dict[str, str], pairs: List[int]):
    student_id = clean_text(record.get('student_id', ''))
    if not student_id:
        raise ParseError(row, "缺少 student_id")
    week_text = clean_text(record.get('report_week', ''))
    try:
        report_week = int(week_text)
    except ValueError:
        raise ParseError(row, f"报告周不是整数: {week_text!r}") from None
    if report_week < 1:
        raise ParseError(row, f"报告周必须 >= 1: {report_week}")

    courses = []
    seen = set()
    for n in pairs:
        code = normalize_course_code(clean_text(record.get(f'course_{n}', '')))
        grade_text = clean_text(record.get(f'grade_{n}', ''))
        if not code:
            if grade_text:
                raise ParseError(row, f"grade_{n} 有成绩但没有课程代码")
            continue
        if code in seen:
            raise ParseError(row, f"课程代码重复: {code}")
        seen.add(code)
        try:
            courses.append((code, parse_grade_cell(grade_text)))
        except UnknownCode:
            raise ParseError(row, f"无法识别的成绩: {grade_text!r}") from None

    journals = {column: clean_text(record.get(column, '')) for column in JOURNAL_COLUMNS}
    has_journal = any(journals.values())

    if not courses and not has_journal:
        # 只有学生编号的空白行按缺交处理
        return (WeeklyReport(student_id, report_week, missing=True, source_row=row),
                MismatchWarning(row, student_id, "空白周报，按缺交处理"))

    report = WeeklyReport(student_id, report_week, courses=tuple(courses), source_row=row, **journals)
    if not courses:
        return report, MismatchWarning(row, student_id, "有周记但没有任何课程成绩")
    if not has_journal:
        return report, MismatchWarning(row, student_id, "有课程成绩但周记栏全部为空")
    return report, None


def format_status_cell(status: GradeStatus) -> str:
    """写回文件时的成绩单元格文本：未出分和通过/不通过制均为空"""
    return status.grade.code if status.kind is StatusKind.REPORTED else ''


def write_reports(path: str, reports: Sequence[WeeklyReport], delimiter: str = '\t',
                  calendar=None):
    """
    写出周报文件（缺交周不写行，已退课程不再列出）

    Args:
        path: 输出路径
        reports: 周报列表
        delimiter: 分隔符
        calendar: 提供时把学期周换算回原始报告周
    """
    submitted = [r for r in reports if not r.missing]
    width = max([sum(1 for _, s in r.courses if s.kind is not StatusKind.DROPPED) for r in submitted] + [1])
    rows = []
    for report in submitted:
        if calendar is not None and report.semester_week is not None:
            report_week = calendar.report_week_of(report.semester_week)
        else:
            report_week = report.report_week
        row: Dict[str, object] = {'student_id': report.student_id, 'report_week': report_week}
        listed = [(code, s) for code, s in report.courses if s.kind is not StatusKind.DROPPED]
        for n in range(1, width + 1):
            code, status = listed[n - 1] if n <= len(listed) else ('', None)
            row[f'course_{n}'] = code
            row[f'grade_{n}'] = format_status_cell(status) if status is not None else ''
        row.update({column: getattr(report, column) for column in JOURNAL_COLUMNS})
        rows.append(row)
    columns = ['student_id', 'report_week']
    for n in range(1, width + 1):
        columns += [f'course_{n}', f'grade_{n}']
    columns += list(JOURNAL_COLUMNS)
    pd.DataFrame(rows, columns=columns).to_csv(path, sep=delimiter, index=False, encoding='utf-8')
