"""
带标注的周记短语库与由其生成的标注语料
合成队列用它拼写周记，离线标注器的准确性测试用它生成的语料
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
import yaml

from domain.codes import QUAL_CODES, QualFeatures
from domain.errors import InvalidConfig
from domain.records import WeeklyReport

JOURNAL_FIELDS = ('journal_cs', 'journal_noncs', 'journal_personal')


@dataclass(frozen=True)
class Sentence:
    text: str
    field: str = 'journal_personal'
    kind: str = ''

    def __post_init__(self):
        if self.field not in JOURNAL_FIELDS:
            raise InvalidConfig(f"未知周记栏: {self.field}")


@dataclass(frozen=True)
class LabeledJournal:
    """
    一条标注语料

    Attributes:
        entry_id: 语料内的序号
        kind: positive / positive_neutral / pair / negative / negative_neutral / neutral / failure
        fields: 三栏周记文本
        expected: 应触发的编码
        negative_kind: 反例类型（hypothetical / resolved / self_action），其余为空
    """
    entry_id: int
    kind: str
    fields: Mapping[str, str] = field(hash=False)
    expected: FrozenSet[str] = frozenset()
    negative_kind: str = ''

    def to_report(self, student_id: str = 'corpus') -> WeeklyReport:
        return WeeklyReport(student_id, 1, 1, **{name: self.fields.get(name, '') for name in JOURNAL_FIELDS})

    @property
    def expected_flags(self) -> QualFeatures:
        return QualFeatures.from_codes(self.expected)


def normalize_illness(codes: Iterable[str]) -> FrozenSet[str]:
    """H1.1 与 H1.2 互斥，同时出现时只保留 H1.2"""
    codes = set(codes)
    if 'H1.2' in codes:
        codes.discard('H1.1')
    return frozenset(codes)


class JournalBank:
    """短语库：每个定性特征的正例句、反例句、中性句与易错写法"""

    def __init__(self, positives: Mapping[str, Sequence[Sentence]], negatives: Sequence[Sentence],
                 neutrals: Sequence[Sentence], failure_cases: Sequence[Tuple[Sentence, FrozenSet[str]]]):
        missing = [code for code in QUAL_CODES if not positives.get(code)]
        if missing:
            raise InvalidConfig(f"短语库缺少正例: {missing}")
        if not neutrals:
            raise InvalidConfig("短语库至少需要一条中性句")
        self.positives = {code: tuple(positives[code]) for code in QUAL_CODES}
        self.negatives = tuple(negatives)
        self.neutrals = tuple(neutrals)
        self.failure_cases = tuple(failure_cases)

    @classmethod
    def load(cls, path: str) -> 'JournalBank':
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
        try:
            positives = {str(code): [Sentence(s['text'], s.get('field', 'journal_personal')) for s in items]
                         for code, items in (data.get('positives') or {}).items()}
            unknown = [code for code in positives if code not in QUAL_CODES]
            if unknown:
                raise InvalidConfig(f"短语库含未知编码: {unknown}")
            negatives = [Sentence(s['text'], s.get('field', 'journal_personal'), s['kind'])
                         for s in data.get('negatives') or ()]
            neutrals = [Sentence(s['text'], s.get('field', 'journal_personal')) for s in data.get('neutrals') or ()]
            failures = [(Sentence(s['text'], s.get('field', 'journal_personal'), 'failure'),
                         frozenset(str(c) for c in s.get('expected') or ()))
                        for s in data.get('failure_cases') or ()]
        except (KeyError, TypeError) as exc:
            raise InvalidConfig(f"短语库 {path} 格式错误: {exc}") from None
        return cls(positives, negatives, neutrals, failures)

    def compose(self, codes: Iterable[str], rng: np.random.Generator, neutral_count: int = 1) -> Dict[str, str]:
        """
        为一组特征拼写周记：每个特征取一句正例，另加若干中性句

        Args:
            codes: 要体现的编码（H1.2 由逐周后处理得到，这里不应传入）
            rng: 随机数生成器
            neutral_count: 中性句数量

        Returns:
            Dict: 三栏周记
        """
        sentences = []
        for code in sorted(set(codes), key=QUAL_CODES.index):
            options = self.positives[code]
            sentences.append(options[int(rng.integers(len(options)))])
        for _ in range(neutral_count):
            sentences.append(self.neutrals[int(rng.integers(len(self.neutrals)))])
        return _place(sentences)

    def labeled_corpus(self) -> List[LabeledJournal]:
        """
        确定性地生成标注语料

        单句正例、正例加中性句、两两特征组合、反例（单独及加中性句）、中性句、易错写法。
        自行处理类反例不与正例混合。
        """
        entries: List[LabeledJournal] = []

        def add(kind, sentences, expected=(), negative_kind=''):
            entries.append(LabeledJournal(len(entries), kind, _place(sentences),
                                          normalize_illness(expected), negative_kind))

        neutral_cycle = itertools.cycle(self.neutrals)
        singles = [(code, s) for code in QUAL_CODES for s in self.positives[code]]
        for code, sentence in singles:
            add('positive', [sentence], [code])
        for code, sentence in singles:
            add('positive_neutral', [sentence, next(neutral_cycle)], [code])
        for i, j in itertools.combinations(range(len(QUAL_CODES)), 2):
            a, b = QUAL_CODES[i], QUAL_CODES[j]
            first = self.positives[a][(i + j) % len(self.positives[a])]
            second = self.positives[b][(i * j) % len(self.positives[b])]
            add('pair', [first, second], [a, b])
        for sentence in self.negatives:
            add('negative', [sentence], negative_kind=sentence.kind)
        for sentence in self.negatives:
            add('negative_neutral', [sentence, next(neutral_cycle)], negative_kind=sentence.kind)
        for sentence in self.neutrals:
            add('neutral', [sentence])
        for sentence, expected in self.failure_cases:
            add('failure', [sentence], expected)
        return entries


def _place(sentences: Sequence[Sentence]) -> Dict[str, str]:
    fields = {name: [] for name in JOURNAL_FIELDS}
    for sentence in sentences:
        fields[sentence.field].append(sentence.text)
    return {name: ' '.join(texts) for name, texts in fields.items()}
