"""
周报读取模块
"""
from .alignment import align_weeks, build_student_semester, resolve_grade_status, resolve_semester
from .catalog import categorize_course, load_calendar, load_catalog, normalize_course_code
from .pipeline import IngestResult, ingest_file, load_semesters, save_semesters, write_issues
from .reports import IngestIssue, MismatchWarning, ParseResult, parse_reports, write_reports

__all__ = [
    'align_weeks', 'build_student_semester', 'resolve_grade_status', 'resolve_semester',
    'categorize_course', 'load_calendar', 'load_catalog', 'normalize_course_code',
    'IngestResult', 'ingest_file', 'load_semesters', 'save_semesters', 'write_issues',
    'IngestIssue', 'MismatchWarning', 'ParseResult', 'parse_reports', 'write_reports',
]
