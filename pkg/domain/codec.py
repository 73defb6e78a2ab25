"""
领域值与普通字典之间的互转（用于 JSON 落盘）
"""
from typing import Any, Dict, List

from .codes import FlagSet
from .grades import CourseCategory, GradeStatus
from .records import (AcademicCalendar, CatalogEntry, CourseCatalog, EscalationState,
                      StudentSemester, WeeklyReport)


def encode_calendar(calendar: AcademicCalendar) -> Dict[str, Any]:
    return {
        'semester_id': calendar.semester_id,
        'weeks': calendar.weeks,
        'drop_deadline_week': calendar.drop_deadline_week,
        'late_drop_deadline_week': calendar.late_drop_deadline_week,
        'final_week': calendar.final_week,
        'holiday_weeks': sorted(calendar.holiday_weeks),
        'week_offset_map': {str(k): v for k, v in calendar.week_offset_map.items()},
    }


def decode_calendar(data: Dict[str, Any]) -> AcademicCalendar:
    return AcademicCalendar(
        semester_id=str(data['semester_id']),
        weeks=int(data['weeks']),
        drop_deadline_week=int(data['drop_deadline_week']),
        late_drop_deadline_week=int(data['late_drop_deadline_week']),
        final_week=int(data['final_week']),
        holiday_weeks=frozenset(int(w) for w in data.get('holiday_weeks', ())),
        week_offset_map={int(k): int(v) for k, v in data.get('week_offset_map', {}).items()},
    )


def encode_catalog(catalog: CourseCatalog) -> Dict[str, Any]:
    return {
        code: {'category': entry.category.value, 'title': entry.title, 'pass_fail': entry.pass_fail}
        for code, entry in sorted(catalog.entries.items())
    }


def decode_catalog(data: Dict[str, Any]) -> CourseCatalog:
    return CourseCatalog({
        str(code): CatalogEntry(CourseCategory(item['category']), str(item.get('title', '')),
                                bool(item.get('pass_fail', False)))
        for code, item in data.items()
    })


def encode_report(report: WeeklyReport) -> Dict[str, Any]:
    return {
        'student_id': report.student_id,
        'report_week': report.report_week,
        'semester_week': report.semester_week,
        'courses': [[code, status.encode()] for code, status in report.courses],
        'journal_cs': report.journal_cs,
        'journal_noncs': report.journal_noncs,
        'journal_personal': report.journal_personal,
        'missing': report.missing,
        'source_row': report.source_row,
    }


def decode_report(data: Dict[str, Any]) -> WeeklyReport:
    return WeeklyReport(
        student_id=str(data['student_id']),
        report_week=int(data['report_week']),
        semester_week=None if data.get('semester_week') is None else int(data['semester_week']),
        courses=tuple((code, GradeStatus.decode(status)) for code, status in data.get('courses', ())),
        journal_cs=data.get('journal_cs', ''),
        journal_noncs=data.get('journal_noncs', ''),
        journal_personal=data.get('journal_personal', ''),
        missing=bool(data.get('missing', False)),
        source_row=int(data.get('source_row', 0)),
    )


def encode_semester(semester: StudentSemester) -> Dict[str, Any]:
    return {
        'student_id': semester.student_id,
        'calendar': encode_calendar(semester.calendar),
        'categories': {code: cat.value for code, cat in sorted(semester.categories.items())},
        'reports': [encode_report(r) for r in semester.reports],
    }


def decode_semester(data: Dict[str, Any]) -> StudentSemester:
    return StudentSemester(
        student_id=str(data['student_id']),
        calendar=decode_calendar(data['calendar']),
        reports=tuple(decode_report(r) for r in data['reports']),
        categories={code: CourseCategory(cat) for code, cat in data.get('categories', {}).items()},
    )


def encode_state(state: EscalationState) -> Dict[str, Any]:
    return {
        'consecutive_misses': state.consecutive_misses,
        'workshops_attended': sorted(state.workshops_attended),
        'escalation_halted': state.escalation_halted,
        'past_late_drop': state.past_late_drop,
    }


def decode_state(data: Dict[str, Any]) -> EscalationState:
    return EscalationState(
        consecutive_misses=int(data['consecutive_misses']),
        workshops_attended=frozenset(data.get('workshops_attended', ())),
        escalation_halted=bool(data['escalation_halted']),
        past_late_drop=bool(data['past_late_drop']),
    )


def encode_flags(flags: FlagSet) -> List[str]:
    return flags.codes()


def decode_flags(cls, codes: List[str]):
    return cls.from_codes(codes)
