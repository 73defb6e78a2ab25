"""
校历与课程目录的读取、写出和课程分类
"""
import logging
import os
from typing import Any, Dict

import yaml

from domain.codec import decode_catalog, encode_calendar, encode_catalog
from domain.errors import InvalidConfig
from domain.grades import CourseCategory
from domain.records import AcademicCalendar, CatalogEntry, CourseCatalog

logger = logging.getLogger(__name__)


def _read_yaml(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise InvalidConfig(f"文件不存在: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise InvalidConfig(f"{path} 顶层必须是映射")
    return data


def load_calendar(path: str, strict: bool = True) -> AcademicCalendar:
    """
    读取校历文件

    未给出 week_offset_map 时，按 holiday_weeks 自动推导报告周到学期周的映射。

    Args:
        path: YAML 文件路径
        strict: 是否检查最少教学周数

    Returns:
        AcademicCalendar: 校历
    """
    data = _read_yaml(path)
    try:
        if data.get('week_offset_map'):
            calendar = AcademicCalendar(
                semester_id=str(data['semester_id']),
                weeks=int(data['weeks']),
                drop_deadline_week=int(data['drop_deadline_week']),
                late_drop_deadline_week=int(data['late_drop_deadline_week']),
                final_week=int(data.get('final_week', data['weeks'])),
                holiday_weeks=frozenset(int(w) for w in data.get('holiday_weeks') or ()),
                week_offset_map={int(k): int(v) for k, v in data['week_offset_map'].items()},
            )
        else:
            calendar = AcademicCalendar.standard(
                str(data['semester_id']), int(data['weeks']), int(data['drop_deadline_week']),
                int(data['late_drop_deadline_week']), data.get('final_week'),
                data.get('holiday_weeks') or ())
    except KeyError as exc:
        raise InvalidConfig(f"校历 {path} 缺少字段 {exc}") from None
    if strict:
        calendar.validate_for_data()
    logger.debug("校历已加载 semester=%s weeks=%d", calendar.semester_id, calendar.weeks)
    return calendar


def save_calendar(calendar: AcademicCalendar, path: str):
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(encode_calendar(calendar), f, allow_unicode=True, sort_keys=True)


def load_catalog(path: str) -> CourseCatalog:
    """
    读取课程目录

    文件格式::

        program: ...
        courses:
          COP3014: {category: CSTrackCore, title: Programming I}
          CIS1930: {category: OtherElectives, title: Seminar, pass_fail: true}
    """
    data = _read_yaml(path)
    courses = data.get('courses') or {}
    try:
        entries = {
            normalize_course_code(str(code)): CatalogEntry(
                CourseCategory(item['category']), str(item.get('title', '')),
                bool(item.get('pass_fail', False)))
            for code, item in courses.items()
        }
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidConfig(f"课程目录 {path} 格式错误: {exc}") from None
    return CourseCatalog(entries)


def save_catalog(catalog: CourseCatalog, path: str, program: str = ''):
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump({'program': program, 'courses': encode_catalog(catalog)}, f,
                       allow_unicode=True, sort_keys=True)


def catalog_from_dict(data: Dict[str, Any]) -> CourseCatalog:
    return decode_catalog(data)


def normalize_course_code(code: str) -> str:
    """课程代码统一为大写并去掉内部空白（"cop 3014" -> "COP3014"）"""
    return ''.join(code.split()).upper()


def categorize_course(code: str, catalog: CourseCatalog) -> CourseCategory:
    """
    课程分类：目录中有则取目录类别，否则归为 OtherElectives

    Args:
        code: 课程代码
        catalog: 课程目录

    Returns:
        CourseCategory: 课程类别
    """
    return catalog.category_of(normalize_course_code(code))
