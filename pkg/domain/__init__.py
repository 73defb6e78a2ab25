"""
领域模块
成绩等级、特征/干预编码、周报与校历等共享类型
"""
from .codes import (INTERVENTION_CODES, QUAL_CODES, QUANT_CODES, TRIGGER_CODES, Intervention,
                    InterventionSet, QualFeatures, QuantFeatures, intervention_parse)
from .errors import MonitorError, UnknownCode
from .grades import CourseCategory, GradeStatus, LetterGrade, StatusKind, grade_below
from .records import (AcademicCalendar, CatalogEntry, CourseCatalog, EscalationState,
                      StudentSemester, WeeklyReport)

__all__ = [
    'INTERVENTION_CODES', 'QUAL_CODES', 'QUANT_CODES', 'TRIGGER_CODES',
    'Intervention', 'InterventionSet', 'QualFeatures', 'QuantFeatures', 'intervention_parse',
    'MonitorError', 'UnknownCode',
    'CourseCategory', 'GradeStatus', 'LetterGrade', 'StatusKind', 'grade_below',
    'AcademicCalendar', 'CatalogEntry', 'CourseCatalog', 'EscalationState',
    'StudentSemester', 'WeeklyReport',
]
