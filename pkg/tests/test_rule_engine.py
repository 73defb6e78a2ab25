"""
规则引擎测试：规则表展开、逐周调整与整学期重放
"""
import itertools
import os

import pytest
import yaml

from domain.codes import QUAL_CODES, QUANT_CODES, TRIGGER_CODES, InterventionSet, QualFeatures, QuantFeatures
from domain.errors import CycleDetected, InvalidConfig, LengthMismatch, UnknownCode
from domain.grades import CourseCategory
from domain.records import EscalationState
from features import extract_quant, flags_frame
from rules import RuleTable, apply_rules, decide_frames, expand_rule, frame_weeks, replay, run_semester
from rules.engine import DEESCALATION_REASON, WORKSHOP_REASON


def _flags(codes):
    quant = QuantFeatures.from_codes(c for c in codes if c in QUANT_CODES)
    qual = QualFeatures.from_codes(c for c in codes if c in QUAL_CODES)
    return quant, qual


def _load_golden(golden_dir, name):
    with open(os.path.join(golden_dir, name), 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def _scenarios():
    path = os.path.join(os.path.dirname(__file__), 'golden', 'escalation_scenarios.yaml')
    with open(path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


class TestRuleTable:

    def test_all_rows_match_golden(self, table, golden_dir):
        golden = _load_golden(golden_dir, 'rule_expansions.yaml')
        assert sorted(golden) == sorted(TRIGGER_CODES)
        for trigger, expected in golden.items():
            assert expand_rule(table, trigger).codes() == InterventionSet.of(*expected).codes(), trigger

    def test_inheritance_monotonic(self, table):
        chains = [('M1.1', 'M1.2'), ('M1.2', 'M1.3'), ('G1.1', 'G1.2'), ('G3.1', 'G3.2'), ('P2.1', 'P2.2'),
                  ('M1.3', 'M2.1'), ('M1.3', 'M2.2')]
        for parent, child in chains:
            assert set(table.expand(parent).codes()) <= set(table.expand(child).codes())

    def test_cycle_detected(self):
        records = [{'trigger': code, 'direct': ['R1']} for code in TRIGGER_CODES]
        records[0]['inherits'] = ['G1.2']
        records[1]['inherits'] = ['G1.1']
        with pytest.raises(CycleDetected) as info:
            RuleTable.from_records(records)
        assert set(info.value.cycle) == {'G1.1', 'G1.2'}

    def test_missing_row_rejected(self):
        records = [{'trigger': code, 'direct': ['R1']} for code in TRIGGER_CODES[1:]]
        with pytest.raises(InvalidConfig):
            RuleTable.from_records(records)

    def test_unknown_codes_rejected(self):
        records = [{'trigger': code, 'direct': ['R1']} for code in TRIGGER_CODES]
        records[0]['direct'] = ['R9']
        with pytest.raises(UnknownCode):
            RuleTable.from_records(records)
        with pytest.raises(UnknownCode):
            RuleTable.from_records([{'trigger': 'Z1', 'direct': []}])

    def test_expand_unknown_trigger(self, table):
        with pytest.raises(UnknownCode):
            table.expand('G9')


class TestApplyRules:

    @pytest.mark.parametrize('scenario', _scenarios(), ids=lambda s: s['name'])
    def test_escalation_scenario(self, scenario, table, calendar, overlay):
        state = EscalationState()
        for step in scenario['weeks']:
            quant, qual = _flags(step['fire'])
            decision, state = apply_rules(table, quant, qual, state, step['week'], calendar, overlay)
            where = f"{scenario['name']} week {step['week']}"
            assert decision.interventions.codes() == InterventionSet.of(*step['expect']).codes(), where
            if 'suppressed' in step:
                assert sorted(decision.suppressed.codes()) == sorted(step['suppressed']), where
            if 'added' in step:
                assert sorted(decision.added.codes()) == sorted(step['added']), where

    def test_golden_file_is_large_enough(self):
        assert len(_scenarios()) >= 50

    def test_no_flags_keeps_state(self, table, calendar, overlay):
        state = EscalationState(0, frozenset({'S3'}), False, False)
        decision, new_state = apply_rules(table, QuantFeatures(), QualFeatures(), state, 3, calendar, overlay)
        assert not decision.interventions
        assert decision.fired_triggers == ()
        assert new_state == state

    def test_reasons_recorded(self, table, calendar, overlay):
        quant, qual = _flags(['M1.3'])
        decision, _ = apply_rules(table, quant, qual, EscalationState(), 10, calendar, overlay)
        assert {reason for _, reason in decision.suppressions} == {DEESCALATION_REASON}

        quant, qual = _flags(['P1'])
        state = EscalationState(workshops_attended=frozenset({'S3'}))
        decision, _ = apply_rules(table, quant, qual, state, 2, calendar, overlay)
        assert decision.suppressions == (('S3', WORKSHOP_REASON),)

    def test_state_update(self, table, calendar, overlay):
        quant, qual = _flags(['M1.1'])
        _, state = apply_rules(table, quant, qual, EscalationState(3), 5, calendar, overlay)
        assert state.consecutive_misses == 4
        assert state.escalation_halted

        _, state = apply_rules(table, QuantFeatures(), QualFeatures(), state, 6, calendar, overlay)
        assert state.consecutive_misses == 0
        assert not state.escalation_halted

        _, state = apply_rules(table, QuantFeatures(), QualFeatures(), state, 9, calendar, overlay)
        assert state.past_late_drop and state.escalation_halted

    def test_explicit_missing_overrides_inference(self, table, calendar, overlay):
        _, state = apply_rules(table, QuantFeatures(), QualFeatures(), EscalationState(2), 3, calendar, overlay,
                               missing=True)
        assert state.consecutive_misses == 3

    def test_union_property_before_adjustment(self, table, calendar, overlay):
        # 四个互不冲突的触发条件的所有子集
        chosen = ['G2.2', 'A4', 'H2', 'O']
        for r in range(len(chosen) + 1):
            for subset in itertools.combinations(chosen, r):
                quant, qual = _flags(subset)
                decision, _ = apply_rules(table, quant, qual, EscalationState(), 3, calendar, overlay)
                expected = InterventionSet()
                for code in subset:
                    expected = expected | table.expand(code)
                assert decision.unadjusted == expected
                assert decision.interventions == expected

    def test_suppression_accounting(self, table, calendar, overlay):
        samples = [['A1'], ['A2', 'H1.2'], ['P2.1', 'P4'], ['M1.3'], ['A1', 'A2', 'H1.1', 'P1'], ['M1.4', 'M2.1']]
        for codes in samples:
            quant, qual = _flags(codes)
            for week in (3, 10):
                decision, _ = apply_rules(table, quant, qual, EscalationState(workshops_attended={'S3'}),
                                          week, calendar, overlay)
                assert not set(decision.interventions.codes()) & set(decision.suppressed.codes())
                left = decision.interventions | decision.suppressed
                right = decision.unadjusted | decision.added
                assert left == right


class TestReplay:

    def test_misses_weeks_two_to_six(self, table, overlay, semester_factory):
        weeks = [{'COP3014': 'A'}] + [None] * 5 + [{'COP3014': 'A'}] * 9
        semester = semester_factory(weeks)
        quant = extract_quant(semester)
        decisions = run_semester(table, semester, quant, [QualFeatures()] * 15, overlay)
        contacts = [d.interventions.codes() for d in decisions[:7]]
        assert contacts == [
            [],
            ['C1.1'],
            ['C1.1', 'C1.2'],
            ['C1.1', 'C1.2', 'C1.3', 'C2'],
            ['C1.1'],
            ['C1.1'],
            [],
        ]

    def test_quiet_semester(self, table, overlay, semester_factory):
        semester = semester_factory([{'COP3014': 'A', 'MAC2311': 'A-'}] * 15)
        decisions = run_semester(table, semester, extract_quant(semester), [QualFeatures()] * 15, overlay)
        assert len(decisions) == 15
        assert all(not d.interventions for d in decisions)

    def test_final_week_stem_grade(self, table, overlay, semester_factory):
        weeks = [{'MAC2311': 'B'}] * 14 + [{'MAC2311': 'D'}]
        semester = semester_factory(weeks, categories={'MAC2311': CourseCategory.CS_TRACK_STEM})
        decisions = run_semester(table, semester, extract_quant(semester), [QualFeatures()] * 15, overlay)
        final = decisions[-1]
        assert {'B3', 'R5'} <= set(final.interventions.codes())
        assert final.fired_triggers == ('G3.1', 'G3.2', 'G3.3')

    def test_length_mismatch(self, table, overlay, semester_factory):
        semester = semester_factory([{'COP3014': 'A'}] * 15)
        with pytest.raises(LengthMismatch):
            run_semester(table, semester, extract_quant(semester)[:-1], [QualFeatures()] * 15, overlay)

    def test_replay_from_snapshot(self, table, calendar, overlay):
        weeks = []
        for w, codes in enumerate([['A1'], ['M1.1'], ['M1.2', 'P1'], [], ['A1', 'P1'], ['M1.1'], ['H2']], start=1):
            quant, qual = _flags(codes)
            weeks.append((w, quant, qual, None))
        full, final_state = replay(table, calendar, overlay, weeks)
        head, mid_state = replay(table, calendar, overlay, weeks[:3])
        tail, resumed_state = replay(table, calendar, overlay, weeks[3:], state=mid_state)
        assert [d.interventions for d in full] == [d.interventions for d in head + tail]
        assert final_state == resumed_state

    def test_replay_deterministic(self, table, calendar, overlay):
        weeks = [(w, *_flags(['M1.1'] if w % 3 == 0 else ['A1']), None) for w in range(1, 16)]
        first, _ = replay(table, calendar, overlay, weeks, student_id='S1')
        second, _ = replay(table, calendar, overlay, weeks, student_id='S1')
        assert first == second


class TestDecideFrames:

    def test_matches_run_semester(self, table, calendar, overlay, semester_factory):
        semesters = [
            semester_factory([{'COP3014': 'C+'}] + [None] * 3 + [{'COP3014': 'B'}] * 11, student_id='S1'),
            semester_factory([{'COP3014': 'A'}] * 15, student_id='S2'),
        ]
        quant = [extract_quant(s) for s in semesters]
        qual = [[QualFeatures.from_codes(['A4']) if w == 5 else QualFeatures() for w in range(1, 16)]
                for _ in semesters]
        expected = []
        for s, q, ql in zip(semesters, quant, qual):
            expected.extend(run_semester(table, s, q, ql, overlay))
        decisions = decide_frames(table, calendar, overlay, flags_frame(semesters, quant, QUANT_CODES),
                                  flags_frame(semesters, qual, QUAL_CODES))
        assert [(d.student_id, d.semester_week, d.interventions) for d in decisions] == \
            [(d.student_id, d.semester_week, d.interventions) for d in expected]

    def test_missing_column_keeps_miss_count_after_late_drop(self, table, calendar, overlay, semester_factory):
        semester = semester_factory([{'COP3014': 'B'}] * 12 + [None] * 3, student_id='S1')
        quant = extract_quant(semester)
        qual = [QualFeatures()] * 15
        assert not quant[13]
        qual_frame = flags_frame([semester], [qual], QUAL_CODES)

        weeks = frame_weeks(flags_frame([semester], [quant], QUANT_CODES, missing=True), qual_frame)['S1']
        assert [missing for *_, missing in weeks] == [r.missing for r in semester.reports]
        decisions, state = replay(table, calendar, overlay, weeks, student_id='S1')
        assert state.consecutive_misses == 3
        assert decisions == run_semester(table, semester, quant, qual, overlay)

        inferred = frame_weeks(flags_frame([semester], [quant], QUANT_CODES), qual_frame)['S1']
        _, inferred_state = replay(table, calendar, overlay, inferred, student_id='S1')
        assert inferred_state.consecutive_misses == 1

    def test_student_sets_must_agree(self, table, calendar, overlay, semester_factory):
        semesters = [semester_factory([{'COP3014': 'A'}] * 15, student_id=s) for s in ('S1', 'S2')]
        quant = flags_frame(semesters, [extract_quant(s) for s in semesters], QUANT_CODES)
        qual = flags_frame(semesters[:1], [[QualFeatures()] * 15], QUAL_CODES)
        with pytest.raises(LengthMismatch):
            decide_frames(table, calendar, overlay, quant, qual)
