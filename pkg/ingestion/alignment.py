"""
周对齐、缺交周补齐与成绩状态消歧
"""
import logging
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

from domain.errors import CalendarError, DuplicateWeek, UnmappedWeek
from domain.grades import DROPPED, NOT_YET_POSTED, PASS_FAIL, REPORT_MISSING, GradeStatus
from domain.records import AcademicCalendar, CourseCatalog, StudentSemester, WeeklyReport
from .catalog import categorize_course
from .reports import IngestIssue

logger = logging.getLogger(__name__)

# 一格成绩历史：None 表示该周周报中没有这门课，REPORT_MISSING 表示该周未交周报
GradeCell = Optional[GradeStatus]


def align_weeks(raw: Sequence[WeeklyReport], calendar: AcademicCalendar) -> List[WeeklyReport]:
    """
    把报告周换算为学期周

    假期周的周报被丢弃；输出按 (学生, 学期周, 源行号) 排序，与输入顺序无关。

    Raises:
        UnmappedWeek: 报告周既不在映射中也不是假期周
    """
    aligned = []
    for report in raw:
        if report.report_week in calendar.holiday_weeks:
            logger.info("丢弃假期周周报 student=%s report_week=%d", report.student_id, report.report_week)
            continue
        semester_week = calendar.semester_week_of(report.report_week)
        if semester_week is None:
            raise UnmappedWeek(report.report_week)
        aligned.append(report.evolve(semester_week=semester_week))
    aligned.sort(key=lambda r: (r.student_id, r.semester_week, r.source_row))
    return aligned


def resolve_grade_status(code: str, history: Sequence[GradeCell],
                         catalog: CourseCatalog) -> List[GradeCell]:
    """
    为一门课逐周确定成绩状态

    空单元格的判定优先级：PassFail（目录或单元格标记） > Dropped > NotYetPosted。
    课程在最后一份已交周报中不再出现时视为退课，从 max(最后出分周 + 1, 首次出现周) 起记为 Dropped，
    之后不再恢复。

    Args:
        code: 课程代码
        history: 按学期周排列的单元格，None 表示该周周报未列出此课，REPORT_MISSING 表示缺交
        catalog: 课程目录

    Returns:
        List: 与 history 等长；首次出现之前为 None，缺交周保持 REPORT_MISSING
    """
    listed = [i for i, cell in enumerate(history) if cell is not None and cell != REPORT_MISSING]
    if not listed:
        return [REPORT_MISSING if cell == REPORT_MISSING else None for cell in history]
    first_listed = listed[0]
    catalog_pass_fail = catalog.is_pass_fail(code)

    dropped_from: Optional[int] = None
    present = [i for i, cell in enumerate(history) if cell != REPORT_MISSING]
    if history[present[-1]] is None:
        graded = [i for i in listed if history[i].is_reported]
        dropped_from = max(graded[-1] + 1, first_listed) if graded else first_listed

    resolved: List[GradeCell] = []
    for i, cell in enumerate(history):
        if cell == REPORT_MISSING:
            resolved.append(REPORT_MISSING)
        elif i < first_listed:
            resolved.append(None)
        elif catalog_pass_fail or cell == PASS_FAIL:
            resolved.append(PASS_FAIL)
        elif dropped_from is not None and i >= dropped_from:
            resolved.append(DROPPED)
        elif cell is not None and cell.is_reported:
            resolved.append(cell)
        else:
            # 空单元格，或课程在中间某周漏填
            resolved.append(NOT_YET_POSTED)
    return resolved


def build_student_semester(reports: Sequence[WeeklyReport], calendar: AcademicCalendar,
                           keep_latest: bool = False,
                           issues: Optional[List[IngestIssue]] = None) -> StudentSemester:
    """
    把一名学生已对齐的周报整理为连续的学期序列

    Args:
        reports: 同一学生、已对齐的周报
        calendar: 校历
        keep_latest: 同一学期周多份周报时保留源行号较大的一份（否则报错）
        issues: 收集警告的列表（可选）

    Returns:
        StudentSemester: 覆盖第 1..final_week 周，缺口补为缺交周

    Raises:
        DuplicateWeek: 同一学期周有多份周报且未开启 keep_latest
    """
    if not reports:
        raise ValueError("至少需要一份周报")
    student_id = reports[0].student_id
    by_week: Dict[int, WeeklyReport] = {}
    for report in sorted(reports, key=lambda r: (r.semester_week, r.source_row)):
        week = report.semester_week
        if week > calendar.final_week:
            _note(issues, IngestIssue('warning', 'BeyondFinalWeek', student_id, report.source_row, week,
                                      f"学期周 {week} 晚于期末周 {calendar.final_week}，已丢弃"))
            continue
        if week in by_week:
            if not keep_latest:
                raise DuplicateWeek(student_id, week)
            _note(issues, IngestIssue('warning', 'DuplicateWeek', student_id, report.source_row, week,
                                      f"保留第 {report.source_row} 行，丢弃第 {by_week[week].source_row} 行"))
        by_week[week] = report

    filled = []
    for week in range(1, calendar.final_week + 1):
        if week in by_week:
            filled.append(by_week[week])
        else:
            filled.append(WeeklyReport.missing_week(student_id, week, _report_week(calendar, week)))
    return StudentSemester(student_id, calendar, tuple(filled))


def resolve_semester(semester: StudentSemester, catalog: CourseCatalog) -> StudentSemester:
    """
    对学期内每门课做成绩状态消歧，并给出课程类别

    每份已交周报改写为完整课表（按课程代码排序，已退课程以 Dropped 保留）。
    """
    codes = sorted({code for report in semester.reports for code in report.course_codes})
    histories = {}
    for code in codes:
        cells = [REPORT_MISSING if r.missing else r.status_of(code) for r in semester.reports]
        histories[code] = resolve_grade_status(code, cells, catalog)

    reports = []
    for i, report in enumerate(semester.reports):
        if report.missing:
            reports.append(report)
            continue
        courses = tuple((code, histories[code][i]) for code in codes if histories[code][i] is not None)
        reports.append(report.evolve(courses=courses))

    categories = {code: categorize_course(code, catalog) for code in codes}
    dropped = [code for code in codes if any(s == DROPPED for s in histories[code])]
    if dropped:
        logger.debug("识别为退课 student=%s courses=%s", semester.student_id, ','.join(dropped))
    return StudentSemester(semester.student_id, semester.calendar, tuple(reports), categories)


def group_by_student(reports: Sequence[WeeklyReport]) -> Dict[str, List[WeeklyReport]]:
    groups: Dict[str, List[WeeklyReport]] = defaultdict(list)
    for report in reports:
        groups[report.student_id].append(report)
    return dict(sorted(groups.items()))


def _report_week(calendar: AcademicCalendar, semester_week: int) -> int:
    try:
        return calendar.report_week_of(semester_week)
    except CalendarError:
        return semester_week


def _note(issues: Optional[List[IngestIssue]], issue: IngestIssue):
    logger.warning("%s student=%s week=%s %s", issue.kind, issue.student_id, issue.week, issue.message)
    if issues is not None:
        issues.append(issue)
