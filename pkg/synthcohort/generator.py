"""
合成队列生成器
按学生类型生成成绩轨迹、缺交模式与由短语库拼写的周记，并用规则引擎在无噪声特征上给出真值标签
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from domain.codes import QUAL_CODES, QualFeatures
from domain.errors import InvalidConfig
from domain.grades import NOT_YET_POSTED, PASS_FAIL, CourseCategory, GradeStatus, LetterGrade
from domain.records import AcademicCalendar, CourseCatalog, StudentSemester, WeeklyReport
from features.journal_bank import JournalBank
from features.qual import promote_consecutive_illness
from features.quant import extract_quant, flags_frame
from ingestion.alignment import resolve_semester
from ingestion.catalog import save_calendar, save_catalog
from ingestion.reports import write_reports
from rules.engine import WeeklyDecision, labels_frame, run_semester
from rules.table import Overlay, RuleTable
from utils.metrics import GroundTruthRecord, truth_from_decisions
from .noise import NoiseConfig

logger = logging.getLogger(__name__)

ARCHETYPES: Tuple[str, ...] = (
    'thriving', 'struggling_academic', 'ill', 'overcommitted', 'disengaged', 'transitioning',
)

# 各类型每周出现的定性特征及概率
WEEKLY_FLAG_RATES: Dict[str, Dict[str, float]] = {
    'thriving': {},
    'struggling_academic': {'A1': 0.15, 'A2': 0.15, 'A3': 0.10},
    'ill': {'A2': 0.10},
    'overcommitted': {'P2.1': 0.35, 'P2.2': 0.15, 'P4': 0.15, 'A2': 0.10},
    'disengaged': {'A2': 0.05},
    'transitioning': {'P3': 0.20, 'P1': 0.08, 'P5': 0.08, 'O': 0.06, 'H2': 0.06, 'A4': 0.10},
}

# 偶发缺交概率（disengaged 另有连续缺交段）
RANDOM_MISS_RATE: Dict[str, float] = {
    'thriving': 0.0, 'struggling_academic': 0.03, 'ill': 0.03,
    'overcommitted': 0.04, 'disengaged': 0.05, 'transitioning': 0.03,
}


@dataclass(frozen=True)
class CohortConfig:
    """
    合成队列配置

    Attributes:
        student_count: 学生数
        calendar: 校历
        catalog: 课程目录
        archetype_mix: 类型 -> 概率（和为 1）
        noise: 噪声配置（生成时不施加，由 inject_noise 使用）
        seed: 主种子
    """
    student_count: int
    calendar: AcademicCalendar
    catalog: CourseCatalog
    archetype_mix: Mapping[str, float] = field(default_factory=lambda: {'thriving': 1.0})
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: int = 42

    def __post_init__(self):
        if self.student_count < 0:
            raise InvalidConfig(f"学生数不能为负: {self.student_count}")
        unknown = [name for name in self.archetype_mix if name not in ARCHETYPES]
        if unknown:
            raise InvalidConfig(f"未知学生类型: {unknown}")
        probs = list(self.archetype_mix.values())
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise InvalidConfig(f"类型概率必须在 [0, 1] 内: {dict(self.archetype_mix)}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise InvalidConfig(f"类型概率之和必须为 1, 实际 {sum(probs)}")
        graded = [c for c, e in self.catalog.entries.items() if not e.pass_fail]
        for category in (CourseCategory.CS_TRACK_CORE, CourseCategory.CS_TRACK_STEM):
            if not any(self.catalog.category_of(c) is category for c in graded):
                raise InvalidConfig(f"课程目录中没有 {category.value} 课程")

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([float(self.archetype_mix.get(name, 0.0)) for name in ARCHETYPES])

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], calendar: AcademicCalendar, catalog: CourseCatalog,
                  noise: Optional[NoiseConfig] = None, seed: int = 42) -> 'CohortConfig':
        return cls(int(data.get('student_count', 0)), calendar, catalog,
                   dict(data.get('archetype_mix') or {'thriving': 1.0}), noise or NoiseConfig(), seed)


@dataclass(frozen=True)
class LatentTrace:
    """
    一名学生的隐状态

    Attributes:
        student_id: 学生编号
        archetype: 学生类型
        qual: 每周真实定性特征（已做连续患病后处理）
        grade_trend: 每周成绩相对基线的平均偏移（等级数）
        missed: 每周是否缺交
    """
    student_id: str
    archetype: str
    qual: Tuple[QualFeatures, ...]
    grade_trend: Tuple[float, ...]
    missed: Tuple[bool, ...]


@dataclass
class Cohort:
    """生成结果：学生学期、真实定性特征、真值标签与规则引擎决策"""
    semesters: List[StudentSemester] = field(default_factory=list)
    true_qual: List[List[QualFeatures]] = field(default_factory=list)
    truth: List[GroundTruthRecord] = field(default_factory=list)
    traces: List[LatentTrace] = field(default_factory=list)
    decisions: List[WeeklyDecision] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.semesters)

    @property
    def week_count(self) -> int:
        return sum(len(s) for s in self.semesters)


def student_id_of(index: int) -> str:
    return f"S{index + 1:04d}"


def _pick_courses(catalog: CourseCatalog, rng: np.random.Generator) -> List[str]:
    """每名学生 4-5 门计分课程（至少一门 CS 核心、一门理工必修），约三成另选一门通过/不通过制课程"""
    graded = sorted(c for c, e in catalog.entries.items() if not e.pass_fail)
    pass_fail = sorted(c for c, e in catalog.entries.items() if e.pass_fail)
    core = [c for c in graded if catalog.category_of(c) is CourseCategory.CS_TRACK_CORE]
    stem = [c for c in graded if catalog.category_of(c) is CourseCategory.CS_TRACK_STEM]
    chosen = [core[int(rng.integers(len(core)))], stem[int(rng.integers(len(stem)))]]
    rest = [c for c in graded if c not in chosen]
    k = min(int(rng.integers(4, 6)) - 2, len(rest))
    chosen += [rest[i] for i in sorted(rng.choice(len(rest), size=k, replace=False))]
    if pass_fail and rng.random() < 0.3:
        chosen.append(pass_fail[int(rng.integers(len(pass_fail)))])
    return sorted(chosen)


def _miss_pattern(archetype: str, weeks: int, rng: np.random.Generator) -> List[bool]:
    missed = [bool(rng.random() < RANDOM_MISS_RATE[archetype]) for _ in range(weeks)]
    if archetype == 'disengaged':
        for _ in range(int(rng.integers(1, 3))):
            length = int(rng.integers(1, 7))
            start = int(rng.integers(0, weeks))
            for w in range(start, min(weeks, start + length)):
                missed[w] = True
    return missed


def _ill_weeks(weeks: int, rng: np.random.Generator) -> List[bool]:
    """1-2 段患病，每段连续 1-3 周"""
    ill = [False] * weeks
    for _ in range(int(rng.integers(1, 3))):
        length = int(rng.integers(1, 4))
        start = int(rng.integers(0, weeks))
        for w in range(start, min(weeks, start + length)):
            ill[w] = True
    return ill


def _grade_plan(archetype: str, courses: Sequence[str], catalog: CourseCatalog, calendar: AcademicCalendar,
                rng: np.random.Generator) -> Tuple[Dict[str, List[GradeStatus]], List[float], Optional[str]]:
    """
    每门课逐周的原始成绩单元格、每周平均趋势，以及（可能的）退课课程

    struggling_academic 的 1-2 门弱势课程在截止周附近跌破 B-；其余类型在 B- 以上小幅波动。
    """
    weeks = calendar.final_week
    drop_window = max(1, calendar.drop_window_week)
    cells: Dict[str, List[GradeStatus]] = {}
    trends = np.zeros(weeks)
    graded = [c for c in courses if not catalog.is_pass_fail(c)]
    weak = set()
    if archetype == 'struggling_academic':
        count = min(len(graded), int(rng.integers(1, 3)))
        weak = {graded[i] for i in rng.choice(len(graded), size=count, replace=False)}

    for code in courses:
        if catalog.is_pass_fail(code):
            cells[code] = [PASS_FAIL] * weeks
            continue
        if archetype == 'thriving':
            base, slope, post_week = int(rng.integers(9, 12)), 0.0, 1
        elif code in weak:
            base = int(rng.integers(7, 9))
            slope = -float(rng.uniform(0.3, 0.6))
            post_week = 1 if rng.random() < 0.7 else int(rng.integers(drop_window, drop_window + 3))
        else:
            base, slope = int(rng.integers(7, 12)), 0.0
            post_week = int(rng.integers(1, drop_window + 1)) if rng.random() < 0.9 else drop_window + 1
        jitter = rng.choice([-1, 0, 1], size=weeks, p=[0.1, 0.8, 0.1])
        floor = 8 if archetype == 'thriving' else (0 if code in weak else 7)
        series = []
        for w in range(weeks):
            value = int(np.clip(round(base + slope * w) + jitter[w], floor, int(LetterGrade.A)))
            trends[w] += value - base
            series.append(GradeStatus.reported(LetterGrade(value)) if w + 1 >= post_week else NOT_YET_POSTED)
        cells[code] = series
    if graded:
        trends /= len(graded)

    dropped = None
    if weak and rng.random() < 0.3:
        candidates = sorted(c for c in weak if catalog.category_of(c) is CourseCategory.OTHER_ELECTIVES)
        if candidates:
            dropped = candidates[0]
    return cells, [float(t) for t in trends], dropped


def _generate_student(index: int, config: CohortConfig, bank: JournalBank) -> Tuple[StudentSemester, LatentTrace]:
    """一名学生，只使用 default_rng([seed, index])，与生成顺序无关"""
    rng = np.random.default_rng([config.seed, index])
    calendar, catalog = config.calendar, config.catalog
    weeks = calendar.final_week
    student_id = student_id_of(index)
    archetype = ARCHETYPES[int(rng.choice(len(ARCHETYPES), p=config.probabilities))]
    courses = _pick_courses(catalog, rng)
    cells, trend, dropped = _grade_plan(archetype, courses, catalog, calendar, rng)
    missed = _miss_pattern(archetype, weeks, rng)
    ill = _ill_weeks(weeks, rng) if archetype == 'ill' else [False] * weeks
    drop_from = calendar.drop_deadline_week
    # 退课前一周必须已有成绩，消歧后才会从截止周起记为 Dropped
    if dropped is not None and not (drop_from >= 2 and cells[dropped][drop_from - 2].is_reported):
        dropped = None

    raw_flags: List[QualFeatures] = []
    reports: List[WeeklyReport] = []
    for w in range(weeks):
        week = w + 1
        report_week = calendar.report_week_of(week)
        if missed[w]:
            raw_flags.append(QualFeatures())
            reports.append(WeeklyReport.missing_week(student_id, week, report_week))
            continue
        codes = {code for code, rate in WEEKLY_FLAG_RATES[archetype].items() if rng.random() < rate}
        if ill[w]:
            codes.add('H1.1')
        if 'P2.2' in codes:
            codes.discard('P2.1')
        raw_flags.append(QualFeatures.from_codes(codes))
        skip_journal = archetype == 'disengaged' and not codes and rng.random() < 0.3
        journal = {} if skip_journal else bank.compose(codes, rng, neutral_count=int(rng.integers(0, 3)))
        listed = tuple((code, cells[code][w]) for code in courses
                       if not (code == dropped and week >= drop_from))
        reports.append(WeeklyReport(student_id, report_week, week, listed, **journal))

    raw = StudentSemester(student_id, calendar, tuple(reports))
    semester = resolve_semester(raw, catalog)
    trace = LatentTrace(student_id, archetype, tuple(promote_consecutive_illness(raw_flags)),
                        tuple(trend), tuple(missed))
    return semester, trace


def generate_cohort(config: CohortConfig, bank: JournalBank, table: RuleTable, overlay: Overlay,
                    n_jobs: int = 1, progress: bool = False) -> Cohort:
    """
    生成合成队列

    Args:
        config: 队列配置
        bank: 周记短语库
        table: 规则表
        overlay: 调整规则
        n_jobs: 并行数（逐学生独立子种子，结果与并行度无关）
        progress: 是否显示进度条

    Returns:
        Cohort: 学生学期、真实定性特征、真值标签（规则引擎在无噪声特征上的输出）
    """
    indices = range(config.student_count)
    iterator = tqdm(indices, desc='合成学生', disable=None if progress else True)
    generated = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(_generate_student)(i, config, bank) for i in iterator
    )
    cohort = Cohort()
    for semester, trace in generated:
        decisions = run_semester(table, semester, extract_quant(semester), list(trace.qual), overlay)
        cohort.semesters.append(semester)
        cohort.traces.append(trace)
        cohort.true_qual.append(list(trace.qual))
        cohort.decisions.extend(decisions)
    cohort.truth = truth_from_decisions(cohort.decisions, labeler='rule_engine')
    counts = pd.Series([t.archetype for t in cohort.traces], dtype=object).value_counts().to_dict()
    logger.info("合成队列完成 students=%d weeks=%d archetypes=%s", len(cohort), cohort.week_count, counts)
    return cohort


def write_cohort(cohort: Cohort, out_dir: str, calendar: AcademicCalendar, catalog: CourseCatalog,
                 semesters: Optional[Sequence[StudentSemester]] = None) -> Dict[str, str]:
    """
    把队列写为与读取流水线相同的文件格式

    Args:
        cohort: 生成结果
        out_dir: 输出目录
        calendar / catalog: 一并写出，便于后续命令直接引用
        semesters: 替代 cohort.semesters 写出的周报（如加噪后的版本）

    Returns:
        Dict[str, str]: 文件标签 -> 路径
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, filename) for name, filename in (
        ('reports', 'reports.tsv'), ('calendar', 'calendar.yaml'), ('catalog', 'catalog.yaml'),
        ('labels', 'labels.tsv'), ('true_qual', 'true_qual.tsv'), ('archetypes', 'archetypes.tsv'))}
    reports = [r for s in (semesters if semesters is not None else cohort.semesters) for r in s.reports]
    write_reports(paths['reports'], reports, calendar=calendar)
    save_calendar(calendar, paths['calendar'])
    save_catalog(catalog, paths['catalog'])
    labels_frame(cohort.decisions).to_csv(paths['labels'], sep='\t', index=False)
    flags_frame(cohort.semesters, cohort.true_qual, QUAL_CODES).to_csv(paths['true_qual'], sep='\t', index=False)
    pd.DataFrame([(t.student_id, t.archetype) for t in cohort.traces],
                 columns=['student_id', 'archetype']).to_csv(paths['archetypes'], sep='\t', index=False)
    return paths
