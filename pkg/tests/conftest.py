"""
共享测试夹具
测试校历：15 周，退课截止第 2 周，晚退课截止第 8 周，期末第 15 周
"""
import os

import pytest

from algorithms import Dataset, encode
from config import COHORT_CONFIG, PATHS
from domain.grades import CourseCategory, GradeStatus
from domain.records import AcademicCalendar, StudentSemester, WeeklyReport
from features import JournalBank, extract_quant, load_lexicon, load_prompt_template
from ingestion import load_calendar, load_catalog
from rules import RuleTable, load_overlay
from synthcohort import CohortConfig, generate_cohort

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), 'golden')


@pytest.fixture(scope='session')
def golden_dir():
    return GOLDEN_DIR


@pytest.fixture(scope='session')
def calendar():
    return AcademicCalendar.standard('test', 15, 2, 8, 15)


@pytest.fixture(scope='session')
def fall_calendar():
    return load_calendar(PATHS['calendar'])


@pytest.fixture(scope='session')
def catalog():
    return load_catalog(PATHS['catalog'])


@pytest.fixture(scope='session')
def table():
    return RuleTable.load(PATHS['rule_table'])


@pytest.fixture(scope='session')
def overlay():
    return load_overlay(PATHS['overlay'])


@pytest.fixture(scope='session')
def lexicon():
    return load_lexicon(PATHS['lexicon'])


@pytest.fixture(scope='session')
def template():
    return load_prompt_template(PATHS['prompt_template'])


@pytest.fixture(scope='session')
def bank():
    return JournalBank.load(PATHS['journal_bank'])


@pytest.fixture
def semester_factory(calendar):
    """
    由逐周描述构造学生学期

    weeks[i] 为 None 表示第 i+1 周缺交；否则为 {课程代码: 成绩文本}，
    成绩文本可为字母成绩或 NotYetPosted / Dropped / PassFail。
    journals 可按周给出个人周记。
    """
    def build(weeks, student_id='S0001', cal=None, categories=None, journals=None):
        cal = cal or calendar
        journals = journals or {}
        reports = []
        for w, courses in enumerate(weeks, start=1):
            if courses is None:
                reports.append(WeeklyReport.missing_week(student_id, w))
                continue
            entries = tuple((code, GradeStatus.decode(text)) for code, text in sorted(courses.items()))
            reports.append(WeeklyReport(student_id, w, w, entries, journal_personal=journals.get(w, 'ok week'),
                                        source_row=w))
        if categories is None:
            codes = {code for courses in weeks if courses for code in courses}
            categories = {code: CourseCategory.OTHER_ELECTIVES for code in codes}
        return StudentSemester(student_id, cal, tuple(reports), categories)

    return build


@pytest.fixture(scope='session')
def cohort(fall_calendar, catalog, bank, table, overlay):
    """60 名学生的小型合成队列（种子固定）"""
    config = CohortConfig(60, fall_calendar, catalog, COHORT_CONFIG['archetype_mix'], seed=7)
    return generate_cohort(config, bank, table, overlay)


@pytest.fixture(scope='session')
def rule_dataset(cohort):
    """真实特征编码、规则引擎决策作标签的数据集"""
    samples = []
    decisions = iter(cohort.decisions)
    for semester, qual in zip(cohort.semesters, cohort.true_qual):
        for week, (quant, flags) in enumerate(zip(extract_quant(semester), qual), start=1):
            decision = next(decisions)
            samples.append(encode(week, semester.calendar, quant, flags, decision.interventions,
                                  semester.student_id))
    return Dataset.from_samples(samples)
