"""
周报读取测试
秋季校历：报告周 13 为假期，报告周 14..16 映射到学期周 13..15
"""
import pandas as pd
import pytest

from domain.errors import DuplicateWeek, ParseError, UnmappedWeek
from domain.grades import (DROPPED, NOT_YET_POSTED, PASS_FAIL, REPORT_MISSING, CourseCategory, GradeStatus,
                           StatusKind)
from domain.records import WeeklyReport
from ingestion import (align_weeks, build_student_semester, categorize_course, ingest_file, load_semesters,
                       normalize_course_code, parse_reports, resolve_grade_status, save_semesters, write_issues,
                       write_reports)
from ingestion.reports import clean_text

HEADER = ['student_id', 'report_week', 'course_1', 'grade_1', 'course_2', 'grade_2',
          'journal_cs', 'journal_noncs', 'journal_personal']

REPORT_WEEKS = [w for w in range(1, 17) if w != 13]


def row(student_id, week, c1='', g1='', c2='', g2='', cs='lab done', noncs='', personal='fine'):
    return [student_id, str(week), c1, g1, c2, g2, cs, noncs, personal]


def write_tsv(tmp_path, rows, header=HEADER, name='reports.tsv'):
    path = tmp_path / name
    lines = ['\t'.join(header)] + ['\t'.join(r) for r in rows]
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return str(path)


def full_semester(student_id, **grades):
    return [row(student_id, w, 'COP3014', grades.get('cop', 'B'), 'ENC1101', grades.get('enc', 'A'))
            for w in REPORT_WEEKS]


class TestParse:

    def test_clean_rows(self, tmp_path):
        result = parse_reports(write_tsv(tmp_path, full_semester('S1')))
        assert len(result.reports) == 15
        assert not result.errors and not result.warnings
        first = result.reports[0]
        assert first.courses == (('COP3014', GradeStatus.decode('B')), ('ENC1101', GradeStatus.decode('A')))
        assert first.source_row == 1

    def test_missing_header_column(self, tmp_path):
        path = write_tsv(tmp_path, [['S1', '1']], header=['student_id', 'report_week'])
        with pytest.raises(ParseError):
            parse_reports(path)

    def test_bad_rows_are_reported_and_skipped(self, tmp_path):
        rows = [row('S1', 1, 'COP3014', 'Q'), row('S1', 'two', 'COP3014', 'A'), row('', 3, 'COP3014', 'A'),
                row('S1', 4, '', 'A'), row('S1', 5, 'COP3014', 'A')]
        result = parse_reports(write_tsv(tmp_path, rows))
        assert [e.row for e in result.errors] == [1, 2, 3, 4]
        assert len(result.reports) == 1

    def test_short_row_is_a_row_error(self, tmp_path):
        path = tmp_path / 'reports.tsv'
        path.write_text('\t'.join(HEADER) + '\n'
                        'S1\t2\tCOP3014\tB\n'
                        + '\t'.join(row('S1', 3, 'COP3014', 'A')) + '\n', encoding='utf-8')
        result = parse_reports(str(path))
        assert [e.row for e in result.errors] == [1]
        assert [(r.report_week, r.source_row) for r in result.reports] == [(3, 2)]

    def test_long_row_keeps_later_row_numbers(self, tmp_path):
        path = tmp_path / 'reports.tsv'
        lines = ['\t'.join(HEADER),
                 '\t'.join(row('S1', 1, 'COP3014', 'A')),
                 '\t'.join(row('S1', 2, 'COP3014', 'A') + ['extra']),
                 '',
                 '\t'.join(row('S1', 4, 'COP3014', 'B'))]
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
        result = parse_reports(str(path))
        assert len(result.errors) == 1
        assert result.errors[0].row == 2
        assert 'extra' in result.errors[0].reason
        assert [(r.report_week, r.source_row) for r in result.reports] == [(1, 1), (4, 4)]

    def test_pass_fail_markers_and_empty_cells(self, tmp_path):
        rows = [row('S1', 1, 'CIS1930', 'S', 'COP3014', ''), row('S1', 2, 'CIS1930', 'fail', 'COP3014', 'b-')]
        reports = parse_reports(write_tsv(tmp_path, rows)).reports
        assert reports[0].status_of('CIS1930') == PASS_FAIL
        assert reports[0].status_of('COP3014') == NOT_YET_POSTED
        assert reports[1].status_of('CIS1930') == PASS_FAIL
        assert reports[1].status_of('COP3014').grade.code == 'B-'

    def test_blank_row_counts_as_missing(self, tmp_path):
        result = parse_reports(write_tsv(tmp_path, [row('S1', 3, cs='', personal='')]))
        assert result.reports[0].missing
        assert len(result.warnings) == 1

    def test_mismatch_warnings(self, tmp_path):
        rows = [row('S1', 1), row('S1', 2, 'COP3014', 'A', cs='', personal='')]
        result = parse_reports(write_tsv(tmp_path, rows))
        assert len(result.reports) == 2
        assert [w.row for w in result.warnings] == [1, 2]

    def test_course_code_normalized(self, tmp_path):
        result = parse_reports(write_tsv(tmp_path, [row('S1', 1, 'cop 3014', 'A')]))
        assert result.reports[0].course_codes == ('COP3014',)
        assert normalize_course_code(' mac\t2311 ') == 'MAC2311'

    @pytest.mark.parametrize('code,category', [
        ('COP3014', CourseCategory.CS_TRACK_CORE),
        ('mac 2311', CourseCategory.CS_TRACK_STEM),
        ('ENC1101', CourseCategory.OTHER_ELECTIVES),
        ('COP3O14', CourseCategory.OTHER_ELECTIVES),
    ])
    def test_categorize_course(self, catalog, code, category):
        assert categorize_course(code, catalog) == category

    def test_duplicate_course_in_row(self, tmp_path):
        result = parse_reports(write_tsv(tmp_path, [row('S1', 1, 'COP3014', 'A', 'cop3014', 'B')]))
        assert len(result.errors) == 1

    def test_invisible_characters_removed(self):
        assert clean_text('good\u200b week\u00a0\tnow\n') == 'good week now'

    def test_custom_delimiter(self, tmp_path):
        path = tmp_path / 'reports.csv'
        path.write_text(','.join(HEADER) + '\n' + ','.join(row('S1', 1, 'COP3014', 'A')) + '\n', encoding='utf-8')
        assert len(parse_reports(str(path), delimiter=',').reports) == 1


class TestAlignment:

    def test_holiday_week_dropped(self, fall_calendar):
        raw = [WeeklyReport('S1', 13, journal_cs='x', source_row=1),
               WeeklyReport('S1', 14, journal_cs='x', source_row=2)]
        aligned = align_weeks(raw, fall_calendar)
        assert [(r.report_week, r.semester_week) for r in aligned] == [(14, 13)]

    def test_unmapped_week(self, fall_calendar):
        with pytest.raises(UnmappedWeek) as info:
            align_weeks([WeeklyReport('S1', 17, journal_cs='x')], fall_calendar)
        assert info.value.report_week == 17

    def test_order_independent(self, fall_calendar):
        raw = [WeeklyReport('S2', 1, journal_cs='x', source_row=1), WeeklyReport('S1', 2, journal_cs='x', source_row=2),
               WeeklyReport('S1', 1, journal_cs='x', source_row=3)]
        assert align_weeks(raw, fall_calendar) == align_weeks(list(reversed(raw)), fall_calendar)

    def test_gaps_filled_as_missing(self, fall_calendar):
        reports = align_weeks([WeeklyReport('S1', 1, journal_cs='x', source_row=1)], fall_calendar)
        semester = build_student_semester(reports, fall_calendar)
        assert len(semester) == 15
        assert [r.missing for r in semester.reports] == [False] + [True] * 14
        assert semester.report(13).report_week == 14

    def test_duplicate_week(self, fall_calendar):
        raw = [WeeklyReport('S1', 2, journal_cs='first', source_row=1),
               WeeklyReport('S1', 2, journal_cs='second', source_row=2)]
        reports = align_weeks(raw, fall_calendar)
        with pytest.raises(DuplicateWeek):
            build_student_semester(reports, fall_calendar)
        issues = []
        semester = build_student_semester(reports, fall_calendar, keep_latest=True, issues=issues)
        assert semester.report(2).journal_cs == 'second'
        assert [(i.severity, i.kind) for i in issues] == [('warning', 'DuplicateWeek')]


class TestGradeStatus:

    def test_dropped_from_after_last_grade(self, catalog):
        b = GradeStatus.decode('B')
        history = [NOT_YET_POSTED, NOT_YET_POSTED, b, NOT_YET_POSTED, NOT_YET_POSTED, None, None]
        resolved = resolve_grade_status('COP3014', history, catalog)
        assert resolved == [NOT_YET_POSTED, NOT_YET_POSTED, b, DROPPED, DROPPED, DROPPED, DROPPED]

    def test_dropped_never_graded(self, catalog):
        history = [None, NOT_YET_POSTED, NOT_YET_POSTED, None]
        assert resolve_grade_status('COP3014', history, catalog) == [None, DROPPED, DROPPED, DROPPED]

    def test_missing_weeks_keep_marker(self, catalog):
        a = GradeStatus.decode('A')
        history = [a, REPORT_MISSING, None, a]
        assert resolve_grade_status('COP3014', history, catalog) == [a, REPORT_MISSING, NOT_YET_POSTED, a]

    def test_trailing_missing_report_is_not_a_drop(self, catalog):
        a = GradeStatus.decode('A')
        history = [a, a, REPORT_MISSING, REPORT_MISSING]
        assert resolve_grade_status('COP3014', history, catalog) == [a, a, REPORT_MISSING, REPORT_MISSING]

    def test_catalog_pass_fail(self, catalog):
        history = [NOT_YET_POSTED, NOT_YET_POSTED]
        assert resolve_grade_status('CIS1930', history, catalog) == [PASS_FAIL, PASS_FAIL]


class TestIngestFile:

    def test_full_pipeline(self, tmp_path, fall_calendar, catalog):
        rows = full_semester('S2', cop='C+') + full_semester('S1')
        result = ingest_file(write_tsv(tmp_path, rows), fall_calendar, catalog)
        assert not result.has_errors
        assert [s.student_id for s in result.semesters] == ['S1', 'S2']
        s2 = result.semesters[1]
        assert s2.report(1).status_of('COP3014').grade.code == 'C+'
        assert s2.category_of('COP3014').value == 'CSTrackCore'
        assert s2.category_of('ENC1101').value == 'OtherElectives'

    def test_row_errors_do_not_stop_ingest(self, tmp_path, fall_calendar, catalog):
        rows = full_semester('S1') + [row('S2', 17, 'COP3014', 'A'), row('S3', 1, 'COP3014', 'Z')]
        rows += [row('S4', 2, 'COP3014', 'A'), row('S4', 2, 'COP3014', 'B')]
        result = ingest_file(write_tsv(tmp_path, rows), fall_calendar, catalog)
        assert result.has_errors
        assert [s.student_id for s in result.semesters] == ['S1']
        kinds = sorted(i.kind for i in result.issues if i.is_error)
        assert kinds == ['DuplicateWeek', 'ParseError', 'UnmappedWeek']

    def test_keep_latest(self, tmp_path, fall_calendar, catalog):
        rows = [row('S4', 2, 'COP3014', 'A'), row('S4', 2, 'COP3014', 'B')]
        result = ingest_file(write_tsv(tmp_path, rows), fall_calendar, catalog, keep_latest=True)
        assert not result.has_errors
        assert result.semesters[0].report(2).status_of('COP3014').grade.code == 'B'

    def test_dropped_course_inferred(self, tmp_path, fall_calendar, catalog):
        rows = []
        for w in REPORT_WEEKS:
            if w <= 5:
                rows.append(row('S1', w, 'COP3014', 'A', 'PSY2012', 'B' if w == 3 else ''))
            else:
                rows.append(row('S1', w, 'COP3014', 'A'))
        semester = ingest_file(write_tsv(tmp_path, rows), fall_calendar, catalog).semesters[0]
        kinds = [semester.report(w).status_of('PSY2012').kind for w in range(1, 16)]
        assert kinds[:3] == [StatusKind.NOT_YET_POSTED, StatusKind.NOT_YET_POSTED, StatusKind.REPORTED]
        assert set(kinds[3:]) == {StatusKind.DROPPED}

    def test_write_and_reread(self, tmp_path, fall_calendar, catalog):
        first = ingest_file(write_tsv(tmp_path, full_semester('S1', cop='D')), fall_calendar, catalog)
        out = tmp_path / 'out.tsv'
        write_reports(str(out), [r for s in first.semesters for r in s.reports], calendar=fall_calendar)
        second = ingest_file(str(out), fall_calendar, catalog)
        assert second.semesters == first.semesters

    def test_corpus_round_trip(self, tmp_path, fall_calendar, catalog):
        result = ingest_file(write_tsv(tmp_path, full_semester('S1')), fall_calendar, catalog)
        path = str(tmp_path / 'corpus.json')
        save_semesters(path, result.semesters)
        assert load_semesters(path) == result.semesters

    def test_issues_file_has_header_when_empty(self, tmp_path):
        path = tmp_path / 'issues.tsv'
        write_issues(str(path), [])
        frame = pd.read_csv(path, sep='\t')
        assert list(frame.columns) == ['severity', 'kind', 'student_id', 'row', 'week', 'message']
        assert frame.empty
