"""
成绩等级与课程成绩状态
字母成绩只做比较，不换算绩点
"""
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Optional

from .errors import UnknownCode


class LetterGrade(IntEnum):
    """
    12 级美式字母成绩，数值越大成绩越高

    A > A- > B+ > B > B- > C+ > C > C- > D+ > D > D- > F
    """
    F = 0
    D_MINUS = 1
    D = 2
    D_PLUS = 3
    C_MINUS = 4
    C = 5
    C_PLUS = 6
    B_MINUS = 7
    B = 8
    B_PLUS = 9
    A_MINUS = 10
    A = 11

    @property
    def code(self) -> str:
        return self.name.replace('_MINUS', '-').replace('_PLUS', '+')

    @classmethod
    def parse(cls, text: str) -> 'LetterGrade':
        """
        解析成绩文本（如 "B+"）

        Raises:
            UnknownCode: 文本不是 12 个等级之一
        """
        try:
            return _BY_CODE[text.strip().upper()]
        except KeyError:
            raise UnknownCode(text) from None

    def __str__(self):
        return self.code


_BY_CODE = {grade.code: grade for grade in LetterGrade}

# 特征阈值
B_MINUS = LetterGrade.B_MINUS
C_MINUS = LetterGrade.C_MINUS


def grade_below(g: LetterGrade, threshold: LetterGrade) -> bool:
    """g 是否严格低于阈值（"低于 B-" 即 C+ 及以下）"""
    return g < threshold


class CourseCategory(str, Enum):
    CS_TRACK_CORE = 'CSTrackCore'
    CS_TRACK_STEM = 'CSTrackSTEM'
    OTHER_ELECTIVES = 'OtherElectives'


class StatusKind(str, Enum):
    REPORTED = 'Reported'
    NOT_YET_POSTED = 'NotYetPosted'
    DROPPED = 'Dropped'
    PASS_FAIL = 'PassFail'
    REPORT_MISSING = 'ReportMissing'


@dataclass(frozen=True)
class GradeStatus:
    """
    某门课在某一周的成绩状态

    Attributes:
        kind: 状态类别
        grade: 仅当 kind 为 REPORTED 时有值
    """
    kind: StatusKind
    grade: Optional[LetterGrade] = None

    def __post_init__(self):
        if (self.kind is StatusKind.REPORTED) != (self.grade is not None):
            raise ValueError(f"状态 {self.kind.value} 与成绩 {self.grade} 不匹配")

    @classmethod
    def reported(cls, grade: LetterGrade) -> 'GradeStatus':
        return cls(StatusKind.REPORTED, grade)

    @property
    def is_reported(self) -> bool:
        return self.kind is StatusKind.REPORTED

    @property
    def is_active(self) -> bool:
        """参与成绩类特征扫描的课程（未退课且非通过/不通过制）"""
        return self.kind not in (StatusKind.DROPPED, StatusKind.PASS_FAIL)

    def encode(self) -> str:
        return self.grade.code if self.is_reported else self.kind.value

    @classmethod
    def decode(cls, text: str) -> 'GradeStatus':
        for kind in StatusKind:
            if kind is not StatusKind.REPORTED and text == kind.value:
                return cls(kind)
        return cls.reported(LetterGrade.parse(text))

    def __str__(self):
        return self.encode()


NOT_YET_POSTED = GradeStatus(StatusKind.NOT_YET_POSTED)
DROPPED = GradeStatus(StatusKind.DROPPED)
PASS_FAIL = GradeStatus(StatusKind.PASS_FAIL)
REPORT_MISSING = GradeStatus(StatusKind.REPORT_MISSING)
