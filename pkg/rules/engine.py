"""
规则引擎
把每周的特征与升级状态映射为干预集合，并记录被抑制与额外加入的干预及原因
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from domain.codes import INTERVENTION_CODES, TRIGGER_CODES, InterventionSet, QualFeatures, QuantFeatures
from domain.errors import LengthMismatch
from domain.records import AcademicCalendar, EscalationState, StudentSemester
from features.quant import frame_to_flags, frame_to_missing
from .table import Overlay, RuleTable

logger = logging.getLogger(__name__)

DEESCALATION_REASON = "escalation halted; weekly email only"
WORKSHOP_REASON = "workshop already scheduled this semester"

Reason = Tuple[str, str]


@dataclass(frozen=True)
class WeeklyDecision:
    """
    一名学生一周的干预决策（审计记录）

    Attributes:
        student_id: 学生编号
        semester_week: 学期周
        fired_triggers: 本周触发的条件（规范顺序）
        interventions: 最终干预
        suppressions: (干预, 原因)
        additions: 冲突规则额外加入的 (干预, 原因)
        unadjusted: 调整前各触发条件展开的并集
    """
    student_id: str
    semester_week: int
    fired_triggers: Tuple[str, ...] = ()
    interventions: InterventionSet = field(default_factory=InterventionSet)
    suppressions: Tuple[Reason, ...] = ()
    additions: Tuple[Reason, ...] = ()
    unadjusted: InterventionSet = field(default_factory=InterventionSet)

    @property
    def suppressed(self) -> InterventionSet:
        return InterventionSet.from_codes(code for code, _ in self.suppressions)

    @property
    def added(self) -> InterventionSet:
        return InterventionSet.from_codes(code for code, _ in self.additions)


def _union(sets) -> InterventionSet:
    result = InterventionSet()
    for item in sets:
        result = result | item
    return result


def apply_rules(table: RuleTable, quant: QuantFeatures, qual: QualFeatures, state: EscalationState,
                week: int, calendar: AcademicCalendar, overlay: Overlay, missing: Optional[bool] = None,
                student_id: str = '') -> Tuple[WeeklyDecision, EscalationState]:
    """
    一周的规则推理

    依次执行：各触发条件展开取并集 -> 缺交降级 -> 一次性工作坊 -> 冲突规则。

    Args:
        table: 规则表
        quant: 本周定量特征
        qual: 本周定性特征
        state: 上周结束时的升级状态
        week: 学期周
        calendar: 校历
        overlay: 调整规则
        missing: 本周是否缺交（None 时由缺交特征推断）
        student_id: 写入决策记录的学生编号

    Returns:
        Tuple[WeeklyDecision, EscalationState]: 本周决策与更新后的状态
    """
    fired = tuple(code for code in TRIGGER_CODES
                  if (quant[code] if code in quant.CODES else qual[code]))
    fired_set = frozenset(fired)
    contributions: Dict[str, InterventionSet] = {code: table.expand(code) for code in fired}
    unadjusted = _union(contributions.values())
    past_late_drop = week > calendar.late_drop_deadline_week

    # 缺交降级：停止升级时缺交档位只保留每周邮件
    tiers = [code for code in fired if code in overlay.deescalation_triggers]
    if tiers and (state.escalation_halted or 'M1.4' in fired_set or past_late_drop):
        for code in tiers:
            contributions[code] = overlay.deescalation_target
    current = _union(contributions.values())
    suppressions: List[Reason] = [(code, DEESCALATION_REASON) for code in (unadjusted - current).codes()]

    # 一次性工作坊
    repeats = [code for code in overlay.once_per_semester
               if code in current and code in state.workshops_attended]
    if repeats:
        current = current - InterventionSet.of(*repeats)
        suppressions += [(code, WORKSHOP_REASON) for code in repeats]

    # 冲突组合
    additions: List[Reason] = []
    for rule in overlay.conflicts:
        if not rule.when.holds(fired_set):
            continue
        if rule.scope is not None:
            outside = _union(v for code, v in contributions.items() if code not in rule.scope)
        else:
            outside = InterventionSet()
        for code in rule.suppress:
            if code in current and code not in outside:
                current = current - InterventionSet.of(code)
                suppressions.append((code, rule.reason))
        suppressed_codes = {code for code, _ in suppressions}
        for code in rule.add:
            if code not in current and code not in suppressed_codes:
                current = current | InterventionSet.of(code)
                additions.append((code, rule.reason))

    if missing is None:
        missing = any(quant[code] for code in ('M1.1', 'M1.2', 'M1.3', 'M1.4', 'M2.1', 'M2.2'))
    misses = state.consecutive_misses + 1 if missing else 0
    if missing:
        halted = state.escalation_halted or misses >= 4 or past_late_drop
    else:
        halted = past_late_drop
    workshops = state.workshops_attended | {code for code in overlay.once_per_semester if code in current}
    new_state = EscalationState(misses, frozenset(workshops), halted, past_late_drop)

    decision = WeeklyDecision(student_id, week, fired, current, tuple(suppressions), tuple(additions), unadjusted)
    return decision, new_state


def replay(table: RuleTable, calendar: AcademicCalendar, overlay: Overlay,
           weeks: Sequence[Tuple[int, QuantFeatures, QualFeatures, bool]],
           state: Optional[EscalationState] = None,
           student_id: str = '') -> Tuple[List[WeeklyDecision], EscalationState]:
    """
    从给定状态开始按周折叠 apply_rules

    Args:
        weeks: (学期周, 定量特征, 定性特征, 是否缺交) 序列，按周递增

    Returns:
        Tuple: 决策列表与最终状态
    """
    state = state or EscalationState()
    decisions = []
    for week, quant, qual, missing in weeks:
        decision, state = apply_rules(table, quant, qual, state, week, calendar, overlay, missing, student_id)
        decisions.append(decision)
    return decisions, state


def run_semester(table: RuleTable, semester: StudentSemester, quant: Sequence[QuantFeatures],
                 qual: Sequence[QualFeatures], overlay: Overlay) -> List[WeeklyDecision]:
    """
    对整个学期逐周推理（从零状态开始）

    Raises:
        LengthMismatch: 特征序列长度与学期周数不一致
    """
    final_week = semester.calendar.final_week
    if len(quant) != final_week or len(qual) != final_week or len(semester.reports) != final_week:
        raise LengthMismatch(f"学生 {semester.student_id}: 周报 {len(semester.reports)} 周, "
                             f"定量特征 {len(quant)} 周, 定性特征 {len(qual)} 周, 期末周 {final_week}")
    weeks = [(report.semester_week, q, ql, report.missing)
             for report, q, ql in zip(semester.reports, quant, qual)]
    decisions, _ = replay(table, semester.calendar, overlay, weeks, student_id=semester.student_id)
    return decisions


def frame_weeks(quant_frame: pd.DataFrame,
                qual_frame: pd.DataFrame) -> Dict[str, List[Tuple[int, QuantFeatures, QualFeatures, Optional[bool]]]]:
    """
    把两份特征矩阵拼成 replay 的逐周输入：学生编号 -> (学期周, 定量, 定性, 是否缺交)

    定量矩阵带 report_missing 列时按该列判定缺交，
    否则缺交记为 None，由 M 类定量特征推断。
    晚退课截止后连续第 2 周的缺交没有对应特征，推断会把连续缺交计数清零。

    Raises:
        LengthMismatch: 两份矩阵的 (学生, 周) 不一致
    """
    quant_by_student = frame_to_flags(quant_frame, QuantFeatures)
    qual_by_student = frame_to_flags(qual_frame, QualFeatures)
    missing_by_student = frame_to_missing(quant_frame) or {}
    if set(quant_by_student) != set(qual_by_student):
        raise LengthMismatch("定量与定性特征矩阵的学生集合不一致")
    result = {}
    for student_id in sorted(quant_by_student):
        quant, qual = quant_by_student[student_id], qual_by_student[student_id]
        if len(quant) != len(qual):
            raise LengthMismatch(f"学生 {student_id}: 定量 {len(quant)} 周, 定性 {len(qual)} 周")
        missing = missing_by_student.get(student_id, [None] * len(quant))
        result[student_id] = [(week, q, ql, m)
                              for week, (q, ql, m) in enumerate(zip(quant, qual, missing), start=1)]
    return result


def decide_frames(table: RuleTable, calendar: AcademicCalendar, overlay: Overlay,
                  quant_frame: pd.DataFrame, qual_frame: pd.DataFrame) -> List[WeeklyDecision]:
    """直接对特征矩阵逐学生推理（predict 子命令使用）"""
    weeks_by_student = frame_weeks(quant_frame, qual_frame)
    decisions: List[WeeklyDecision] = []
    for student_id, weeks in weeks_by_student.items():
        student_decisions, _ = replay(table, calendar, overlay, weeks, student_id=student_id)
        decisions.extend(student_decisions)
    logger.info("已对特征矩阵推理 students=%d weeks=%d", len(weeks_by_student), len(decisions))
    return decisions


def decisions_frame(decisions: Sequence[WeeklyDecision]) -> pd.DataFrame:
    """决策导出：每个学生-周一行，列出触发条件、干预、抑制与加入（含原因）"""
    rows = [{
        'student_id': d.student_id,
        'semester_week': d.semester_week,
        'fired_triggers': ','.join(d.fired_triggers),
        'interventions': ','.join(d.interventions.codes()),
        'suppressions': ';'.join(f"{code}:{reason}" for code, reason in d.suppressions),
        'additions': ';'.join(f"{code}:{reason}" for code, reason in d.additions),
    } for d in decisions]
    return pd.DataFrame(rows, columns=['student_id', 'semester_week', 'fired_triggers', 'interventions',
                                       'suppressions', 'additions'])


def labels_frame(decisions: Sequence[WeeklyDecision]) -> pd.DataFrame:
    """标签矩阵：每个学生-周一行，23 个干预列取值 0/1"""
    rows = []
    for d in decisions:
        row = {'student_id': d.student_id, 'semester_week': d.semester_week}
        row.update({code: int(code in d.interventions) for code in INTERVENTION_CODES})
        rows.append(row)
    return pd.DataFrame(rows, columns=['student_id', 'semester_week'] + list(INTERVENTION_CODES))
