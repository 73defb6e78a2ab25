"""
领域记录类型
校历、课程目录、周报、学生学期与升级状态，全部为不可变值
"""
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

from .errors import CalendarError, InvalidConfig
from .grades import CourseCategory, GradeStatus

# 真实校历文件要求的最少教学周数
MIN_SEMESTER_WEEKS = 10

# 一次性工作坊（每学期最多安排一次）
WORKSHOP_CODES: Tuple[str, ...] = ('S2', 'S3', 'S4')


@dataclass(frozen=True)
class AcademicCalendar:
    """
    学期校历

    构造时只检查锚点顺序与周映射；"至少 10 周" 由 validate_for_data 检查，
    从文件加载时调用，直接构造的短学期（测试夹具）不受此限制。

    Attributes:
        semester_id: 学期标识
        weeks: 学期总周数
        drop_deadline_week: 退课截止周
        late_drop_deadline_week: 晚退课截止周
        final_week: 期末周
        holiday_weeks: 原始数据中被跳过的报告周（假期、停课）
        week_offset_map: 报告周 -> 学期周
    """
    semester_id: str
    weeks: int
    drop_deadline_week: int
    late_drop_deadline_week: int
    final_week: int
    holiday_weeks: FrozenSet[int] = frozenset()
    week_offset_map: Mapping[int, int] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, 'holiday_weeks', frozenset(self.holiday_weeks))
        object.__setattr__(self, 'week_offset_map', dict(sorted(self.week_offset_map.items())))
        if not (1 <= self.drop_deadline_week < self.late_drop_deadline_week
                < self.final_week <= self.weeks):
            raise CalendarError(
                f"校历锚点需满足 1 <= 退课({self.drop_deadline_week}) < 晚退课({self.late_drop_deadline_week})"
                f" < 期末({self.final_week}) <= 总周数({self.weeks})")
        previous = 0
        for report_week, semester_week in self.week_offset_map.items():
            if report_week in self.holiday_weeks:
                raise CalendarError(f"假期周 {report_week} 不能出现在周映射中")
            if semester_week <= previous:
                raise CalendarError("周映射必须单射且单调递增")
            previous = semester_week

    @classmethod
    def standard(cls, semester_id: str, weeks: int, drop_deadline_week: int,
                 late_drop_deadline_week: int, final_week: Optional[int] = None,
                 holiday_weeks: Iterable[int] = ()) -> 'AcademicCalendar':
        """
        按假期周自动推导周映射：跳过假期周，其余报告周依次对应学期周 1..weeks
        """
        holidays = frozenset(holiday_weeks)
        mapping: Dict[int, int] = {}
        report_week = 0
        for semester_week in range(1, weeks + 1):
            report_week += 1
            while report_week in holidays:
                report_week += 1
            mapping[report_week] = semester_week
        return cls(semester_id, weeks, drop_deadline_week, late_drop_deadline_week,
                   final_week if final_week is not None else weeks, holidays, mapping)

    def validate_for_data(self):
        """真实数据的校历还需满足最少周数"""
        if self.weeks < MIN_SEMESTER_WEEKS:
            raise CalendarError(f"学期周数 {self.weeks} 少于 {MIN_SEMESTER_WEEKS}")

    def semester_week_of(self, report_week: int) -> Optional[int]:
        return self.week_offset_map.get(report_week)

    def report_week_of(self, semester_week: int) -> int:
        for report_week, mapped in self.week_offset_map.items():
            if mapped == semester_week:
                return report_week
        raise CalendarError(f"学期周 {semester_week} 没有对应的报告周")

    @property
    def drop_window_week(self) -> int:
        """退课截止前一周"""
        return self.drop_deadline_week - 1

    @property
    def late_drop_window_week(self) -> int:
        """晚退课截止前一周"""
        return self.late_drop_deadline_week - 1


@dataclass(frozen=True)
class CatalogEntry:
    category: CourseCategory
    title: str = ''
    pass_fail: bool = False


@dataclass(frozen=True)
class CourseCatalog:
    """课程目录：课程代码 -> (类别, 名称, 是否通过/不通过制)"""
    entries: Mapping[str, CatalogEntry] = field(hash=False)

    def __post_init__(self):
        if not self.entries:
            raise InvalidConfig("课程目录不能为空")

    def category_of(self, code: str) -> CourseCategory:
        entry = self.entries.get(code)
        return entry.category if entry else CourseCategory.OTHER_ELECTIVES

    def is_pass_fail(self, code: str) -> bool:
        entry = self.entries.get(code)
        return bool(entry and entry.pass_fail)

    def __contains__(self, code: str) -> bool:
        return code in self.entries


CourseEntry = Tuple[str, GradeStatus]


@dataclass(frozen=True)
class WeeklyReport:
    """
    一名学生一周的周报

    Attributes:
        student_id: 不透明的学生编号
        report_week: 原始报告周
        semester_week: 对齐后的学期周（对齐前为 None）
        courses: (课程代码, 成绩状态) 列表
        journal_cs / journal_noncs / journal_personal: 三栏周记
        missing: 本周是否未提交
        source_row: 源文件行号（合成的缺交周为 0）
    """
    student_id: str
    report_week: int
    semester_week: Optional[int] = None
    courses: Tuple[CourseEntry, ...] = ()
    journal_cs: str = ''
    journal_noncs: str = ''
    journal_personal: str = ''
    missing: bool = False
    source_row: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'courses', tuple((code, status) for code, status in self.courses))
        if self.missing and (self.courses or self.has_journal):
            raise ValueError(f"缺交周报不能包含课程或周记: {self.student_id} 第 {self.report_week} 周")
        codes = [code for code, _ in self.courses]
        if len(codes) != len(set(codes)):
            raise ValueError(f"同一周报中课程代码重复: {codes}")

    @classmethod
    def missing_week(cls, student_id: str, semester_week: int, report_week: int = 0) -> 'WeeklyReport':
        return cls(student_id, report_week or semester_week, semester_week, missing=True)

    @property
    def has_journal(self) -> bool:
        return bool(self.journal_cs or self.journal_noncs or self.journal_personal)

    @property
    def course_codes(self) -> Tuple[str, ...]:
        return tuple(code for code, _ in self.courses)

    def status_of(self, code: str) -> Optional[GradeStatus]:
        for course_code, status in self.courses:
            if course_code == code:
                return status
        return None

    def evolve(self, **changes) -> 'WeeklyReport':
        return replace(self, **changes)


@dataclass(frozen=True)
class StudentSemester:
    """
    一名学生一个学期的完整周报序列，覆盖学期周 1..final_week 且连续

    categories 保存本学期出现过的每门课的类别。
    """
    student_id: str
    calendar: AcademicCalendar
    reports: Tuple[WeeklyReport, ...]
    categories: Mapping[str, CourseCategory] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, 'reports', tuple(self.reports))
        weeks = [r.semester_week for r in self.reports]
        if weeks != list(range(1, self.calendar.final_week + 1)):
            raise ValueError(f"学生 {self.student_id} 的周报未连续覆盖第 1..{self.calendar.final_week} 周")

    def __len__(self) -> int:
        return len(self.reports)

    def report(self, semester_week: int) -> WeeklyReport:
        return self.reports[semester_week - 1]

    def category_of(self, code: str) -> CourseCategory:
        return self.categories.get(code, CourseCategory.OTHER_ELECTIVES)


@dataclass(frozen=True)
class EscalationState:
    """
    学生-学期的联系升级记忆

    Attributes:
        consecutive_misses: 当前连续缺交周数
        workshops_attended: 本学期已安排过的工作坊 (S2/S3/S4)
        escalation_halted: 是否停止升级联系力度
        past_late_drop: 是否已过晚退课截止
    """
    consecutive_misses: int = 0
    workshops_attended: FrozenSet[str] = frozenset()
    escalation_halted: bool = False
    past_late_drop: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'workshops_attended', frozenset(self.workshops_attended))
        if self.consecutive_misses < 0:
            raise ValueError("consecutive_misses 不能为负")
        if not self.workshops_attended <= set(WORKSHOP_CODES):
            raise ValueError(f"非工作坊编码: {sorted(self.workshops_attended - set(WORKSHOP_CODES))}")
