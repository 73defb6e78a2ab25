"""
定性特征抽取的提示词模板与提示词构造
"""
import hashlib
from dataclasses import dataclass
from typing import List, Mapping, Tuple

import yaml

from domain.codes import QUAL_CATEGORIES, QUAL_CODES
from domain.errors import InvalidConfig
from domain.records import AcademicCalendar, WeeklyReport

EMPTY_JOURNAL_MARKER = '[JOURNAL IS EMPTY]'
JOURNAL_HEADERS = (
    ('journal_cs', 'CS COURSES:'),
    ('journal_noncs', 'OTHER COURSES:'),
    ('journal_personal', 'PERSONAL:'),
)


@dataclass(frozen=True)
class PromptTemplate:
    """
    提示词模板

    Attributes:
        version: 模板版本（参与标注缓存键）
        instruction: 任务说明
        freshman_context: 一年级新生背景说明
        feature_definitions: 14 个 (编码, 描述)
        positive_examples: (周记片段, 应触发的编码)
        negative_examples: (周记片段, 不应触发的编码)
        output_schema_hint: 输出格式说明
    """
    version: str
    instruction: str
    freshman_context: str
    feature_definitions: Tuple[Tuple[str, str], ...]
    positive_examples: Tuple[Tuple[str, Tuple[str, ...]], ...]
    negative_examples: Tuple[Tuple[str, Tuple[str, ...]], ...]
    output_schema_hint: str

    def __post_init__(self):
        codes = [code for code, _ in self.feature_definitions]
        if sorted(codes) != sorted(QUAL_CODES) or len(codes) != len(set(codes)):
            raise InvalidConfig("模板的特征定义必须恰好覆盖 14 个定性编码各一次")
        for label, examples in (('正例', self.positive_examples), ('反例', self.negative_examples)):
            covered = {code[0] for _, flags in examples for code in flags}
            missing = [c for c in QUAL_CATEGORIES if c not in covered]
            if missing:
                raise InvalidConfig(f"模板缺少 {','.join(missing)} 类的{label}")

    @property
    def digest(self) -> str:
        """模板内容哈希，用于区分同版本号下的改动"""
        return hashlib.sha256(repr(self).encode('utf-8')).hexdigest()[:12]


def load_prompt_template(path: str) -> PromptTemplate:
    with open(path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f)
    try:
        definitions = data["definitions"]
        unknown = [code for code in definitions if code not in QUAL_CODES]
        if unknown:
            raise InvalidConfig(f"提示词模板 {path} 含未知编码: {unknown}")
        return PromptTemplate(
            version=str(data['version']),
            instruction=data['instruction'].strip(),
            freshman_context=data['freshman_context'].strip(),
            feature_definitions=tuple((code, str(definitions[code])) for code in QUAL_CODES
                                      if code in definitions),
            positive_examples=tuple((e['text'], tuple(e['flags'])) for e in data['positive_examples']),
            negative_examples=tuple((e['text'], tuple(e['not_flags'])) for e in data['negative_examples']),
            output_schema_hint=data['output_schema_hint'].strip(),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise InvalidConfig(f"提示词模板 {path} 格式错误: {exc}") from None


def journal_section(report: WeeklyReport) -> str:
    """三栏周记带标题拼接；全部为空时给出明确标记"""
    if not report.has_journal:
        return EMPTY_JOURNAL_MARKER
    return '\n'.join(f"{header} {getattr(report, field)}" for field, header in JOURNAL_HEADERS)


def _course_lines(report: WeeklyReport, categories: Mapping[str, object]) -> List[str]:
    lines = []
    for code, status in report.courses:
        category = categories.get(code)
        label = getattr(category, 'value', 'OtherElectives')
        lines.append(f"- {code} ({label}): {status.encode()}")
    return lines


def build_prompt(template: PromptTemplate, report: WeeklyReport, calendar: AcademicCalendar,
                 categories: Mapping[str, object] = None) -> str:
    """
    构造一周周记的标注提示词

    Args:
        template: 提示词模板
        report: 已对齐的周报（不能是缺交周）
        calendar: 校历（提供周次与截止周背景）
        categories: 课程代码 -> 类别，用于在提示词中标注课程性质

    Returns:
        str: 提示词全文

    Raises:
        ValueError: 缺交周没有可标注的周记
    """
    if report.missing:
        raise ValueError(f"学生 {report.student_id} 第 {report.semester_week} 周未交周报")
    week = report.semester_week if report.semester_week is not None else report.report_week
    parts = [
        template.instruction,
        template.freshman_context,
        'CONCERN CODES:',
        *[f"- {code}: {text}" for code, text in template.feature_definitions],
        'EXAMPLES THAT SHOULD BE FLAGGED:',
        *[f'- "{text}" -> {", ".join(flags)}' for text, flags in template.positive_examples],
        'EXAMPLES THAT MUST NOT BE FLAGGED:',
        *[f'- "{text}" -> not {", ".join(flags)}' for text, flags in template.negative_examples],
        f"CONTEXT: semester week {week} of {calendar.final_week}; drop deadline week "
        f"{calendar.drop_deadline_week}; late drop deadline week {calendar.late_drop_deadline_week}.",
    ]
    courses = _course_lines(report, categories or {})
    if courses:
        parts += ['COURSES THIS WEEK:', *courses]
    parts += ['JOURNAL:', journal_section(report), template.output_schema_hint]
    return '\n'.join(parts)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode('utf-8')).hexdigest()
