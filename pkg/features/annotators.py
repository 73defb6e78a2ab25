"""
定性特征标注器
远程标注器：兼容 /api/generate 风格接口的本地大模型服务
离线标注器：基于词表的确定性短语匹配，带假设/否定/已解决守卫
"""
import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Pattern, Tuple

import requests
import yaml

from domain.codes import QUAL_CODES, QualFeatures
from domain.errors import InvalidConfig, MalformedAnnotation, TransportError
from domain.records import WeeklyReport

logger = logging.getLogger(__name__)

JOURNAL_FIELDS = ('journal_cs', 'journal_noncs', 'journal_personal')
_CLAUSE_SPLIT = re.compile(r'[.!?;\n]+')
_APOSTROPHES = str.maketrans({'’': "'", '‘': "'", 'ʼ': "'", '`': "'"})


@dataclass(frozen=True)
class AnnotatorConfig:
    """
    远程标注器配置

    Attributes:
        endpoint_url: 生成接口地址
        model_name: 模型名
        temperature: 采样温度（>= 0）
        max_retries: 传输失败或输出无法解析时的重试次数（>= 0）
        timeout: 单次请求超时（秒）
    """
    endpoint_url: str
    model_name: str
    temperature: float = 0.1
    max_retries: int = 2
    timeout: float = 120.0

    def __post_init__(self):
        if self.temperature < 0:
            raise InvalidConfig(f"temperature 不能为负: {self.temperature}")
        if self.max_retries < 0:
            raise InvalidConfig(f"max_retries 不能为负: {self.max_retries}")
        if self.timeout <= 0:
            raise InvalidConfig(f"timeout 必须为正: {self.timeout}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'AnnotatorConfig':
        return cls(str(data['endpoint_url']), str(data['model_name']), float(data.get('temperature', 0.1)),
                   int(data.get('max_retries', 2)), float(data.get('timeout', 120.0)))


@dataclass(frozen=True)
class AnnotationResult:
    """
    一周周记的标注结果

    Attributes:
        flags: 14 个定性特征
        rationales: 编码 -> 引用的周记证据（每个为真的编码都有）
        raw_response: 原始输出（审计用）
        source: "remote" 或 "fallback"
    """
    flags: QualFeatures
    rationales: Mapping[str, str] = field(default_factory=dict, hash=False)
    raw_response: str = ''
    source: str = 'fallback'

    def __post_init__(self):
        for code in self.flags.codes():
            if not str(self.rationales.get(code, '')).strip():
                raise ValueError(f"特征 {code} 为真但缺少依据")


# ---------------------------------------------------------------------------
# 远程标注
# ---------------------------------------------------------------------------

def parse_annotation(raw: str) -> AnnotationResult:
    """
    严格解析模型输出

    输出必须是 JSON 对象，flags 恰好包含 14 个编码且值为布尔，为真的编码都要有非空依据。

    Raises:
        MalformedAnnotation: 任一条件不满足
    """
    try:
        data = json.loads(raw)
    except (TypeError, ValueError):
        raise MalformedAnnotation(raw, "不是合法 JSON") from None
    if not isinstance(data, dict) or not isinstance(data.get('flags'), dict):
        raise MalformedAnnotation(raw, "缺少 flags 对象")
    flags = data['flags']
    unknown = sorted(set(flags) - set(QUAL_CODES))
    missing = [code for code in QUAL_CODES if code not in flags]
    if unknown or missing:
        raise MalformedAnnotation(raw, f"编码不符: 多出 {unknown} 缺少 {missing}")
    if not all(isinstance(v, bool) for v in flags.values()):
        raise MalformedAnnotation(raw, "flags 的值必须是布尔")
    rationales = data.get('rationales') or {}
    if not isinstance(rationales, dict):
        raise MalformedAnnotation(raw, "rationales 必须是对象")
    true_codes = [code for code in QUAL_CODES if flags[code]]
    lacking = [code for code in true_codes if not str(rationales.get(code, '')).strip()]
    if lacking:
        raise MalformedAnnotation(raw, f"缺少依据: {lacking}")
    return AnnotationResult(QualFeatures.from_codes(true_codes),
                            {code: str(rationales[code]) for code in true_codes}, raw, 'remote')


class RemoteAnnotator:
    """
    远程标注器

    请求体: {model, prompt, stream: false, format: "json", options: {temperature}}
    响应体: {"response": "<模型生成的 JSON 文本>", ...}
    """

    def __init__(self, config: AnnotatorConfig, session: Optional[requests.Session] = None):
        """
        Args:
            config: 标注器配置
            session: HTTP 会话（测试时注入假会话）
        """
        self.config = config
        self.session = session or requests.Session()

    def payload(self, prompt: str) -> Dict[str, Any]:
        return {
            'model': self.config.model_name,
            'prompt': prompt,
            'stream': False,
            'format': 'json',
            'options': {'temperature': self.config.temperature},
        }

    def annotate(self, prompt: str) -> AnnotationResult:
        """
        发送一次标注请求，失败时最多重试 max_retries 次

        Raises:
            TransportError: 最后一次尝试为传输错误
            MalformedAnnotation: 最后一次尝试的输出不合格
        """
        last_error: Exception = TransportError("未发送请求")
        for attempt in range(self.config.max_retries + 1):
            try:
                response = self.session.post(self.config.endpoint_url, json=self.payload(prompt),
                                             timeout=self.config.timeout)
                response.raise_for_status()
                body = response.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = TransportError(f"请求失败: {exc}")
                logger.warning("标注请求失败 attempt=%d error=%s", attempt + 1, exc)
                continue
            raw = body.get('response', '') if isinstance(body, dict) else ''
            try:
                return parse_annotation(raw)
            except MalformedAnnotation as exc:
                last_error = exc
                logger.warning("标注输出不合格 attempt=%d reason=%s", attempt + 1, exc.reason)
        raise last_error

    def __repr__(self):
        return f"RemoteAnnotator(model={self.config.model_name}, url={self.config.endpoint_url})"


def annotate_remote(config: AnnotatorConfig, prompt: str,
                    session: Optional[requests.Session] = None) -> AnnotationResult:
    return RemoteAnnotator(config, session).annotate(prompt)


# ---------------------------------------------------------------------------
# 离线标注
# ---------------------------------------------------------------------------

def _word_pattern(phrase: str) -> Pattern:
    return re.compile(r'(?<![\w-])' + re.escape(phrase) + r"(?![\w-])")


@dataclass(frozen=True)
class Lexicon:
    """
    离线标注词表（已编译）

    Attributes:
        phrases: 编码 -> [(短语, 正则)]
        prefix_guards: 出现在匹配之前即作废的提示词
        suffix_guards: 出现在匹配之后即作废的提示词
        self_actions: [(短语正则, 被抑制的编码)]
    """
    phrases: Mapping[str, Tuple[Tuple[str, Pattern], ...]]
    prefix_guards: Tuple[Pattern, ...]
    suffix_guards: Tuple[Pattern, ...]
    self_actions: Tuple[Tuple[Pattern, Tuple[str, ...]], ...]
    version: str = '1'

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Lexicon':
        phrases = data.get('phrases') or {}
        unknown = [code for code in phrases if code not in QUAL_CODES]
        if unknown:
            raise InvalidConfig(f"词表含未知编码: {unknown}")
        compiled = {
            code: tuple((p.lower(), _word_pattern(p.lower())) for p in phrases.get(code, ()))
            for code in QUAL_CODES
        }
        actions = []
        for item in data.get('self_actions') or ():
            codes = tuple(item['suppresses'])
            if any(code not in QUAL_CODES for code in codes):
                raise InvalidConfig(f"自行处理规则含未知编码: {codes}")
            actions.append((_word_pattern(item['phrase'].lower()), codes))
        return cls(
            phrases=compiled,
            prefix_guards=tuple(_word_pattern(g.lower()) for g in data.get('prefix_guards') or ()),
            suffix_guards=tuple(_word_pattern(g.lower()) for g in data.get('suffix_guards') or ()),
            self_actions=tuple(actions),
            version=str(data.get('version', '1')),
        )


def load_lexicon(path: str) -> Lexicon:
    with open(path, 'r', encoding='utf-8') as f:
        return Lexicon.from_dict(yaml.safe_load(f) or {})


def normalize_text(text: str) -> str:
    return text.translate(_APOSTROPHES).lower()


def split_clauses(text: str) -> List[str]:
    return [c.strip() for c in _CLAUSE_SPLIT.split(normalize_text(text)) if c.strip()]


def _guarded(clause: str, start: int, end: int, lexicon: Lexicon) -> bool:
    before = clause[:start]
    after = clause[end:]
    return (any(g.search(before) for g in lexicon.prefix_guards)
            or any(g.search(after) for g in lexicon.suffix_guards))


def match_clause(clause: str, lexicon: Lexicon) -> Dict[str, str]:
    """
    一个分句中未被守卫的匹配：编码 -> 第一个匹配到的短语
    """
    found: Dict[str, str] = {}
    for code in QUAL_CODES:
        for phrase, pattern in lexicon.phrases[code]:
            if any(not _guarded(clause, m.start(), m.end(), lexicon) for m in pattern.finditer(clause)):
                found[code] = phrase
                break
    return found


def annotate_fallback(report: WeeklyReport, lexicon: Lexicon) -> AnnotationResult:
    """
    离线标注一周周记

    每栏按句末标点拆为分句逐句匹配；学生已自行处理的情况在整条周记内抑制对应编码；
    同时命中 H1.1 与 H1.2 时只保留 H1.2。依据为匹配到的短语。
    """
    rationales: Dict[str, str] = {}
    suppressed = set()
    for field_name in JOURNAL_FIELDS:
        text = getattr(report, field_name)
        if not text:
            continue
        for clause in split_clauses(text):
            for code, phrase in match_clause(clause, lexicon).items():
                rationales.setdefault(code, phrase)
            for pattern, codes in lexicon.self_actions:
                if pattern.search(clause):
                    suppressed.update(codes)

    for code in suppressed:
        rationales.pop(code, None)
    if 'H1.2' in rationales:
        rationales.pop('H1.1', None)

    codes = [code for code in QUAL_CODES if code in rationales]
    flags = QualFeatures.from_codes(codes)
    raw = json.dumps({'flags': {code: flags[code] for code in QUAL_CODES},
                      'rationales': {code: rationales[code] for code in codes}}, sort_keys=True)
    return AnnotationResult(flags, {code: rationales[code] for code in codes}, raw, 'fallback')
