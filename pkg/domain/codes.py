"""
特征与干预编码
定量特征 13 个、定性特征 14 个、干预措施 23 个，外部统一使用带点的规范编码（如 "C1.1"）
"""
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import ClassVar, Iterable, Iterator, List, Tuple, Union

import numpy as np

from .errors import UnknownCode

QUANT_CODES: Tuple[str, ...] = (
    'G1.1', 'G1.2', 'G2.1', 'G2.2', 'G3.1', 'G3.2', 'G3.3',
    'M1.1', 'M1.2', 'M1.3', 'M1.4', 'M2.1', 'M2.2',
)

QUAL_CODES: Tuple[str, ...] = (
    'A1', 'A2', 'A3', 'A4', 'H1.1', 'H1.2', 'H2',
    'P1', 'P2.1', 'P2.2', 'P3', 'P4', 'P5', 'O',
)

TRIGGER_CODES: Tuple[str, ...] = QUANT_CODES + QUAL_CODES

INTERVENTION_CODES: Tuple[str, ...] = (
    'C1.1', 'C1.2', 'C1.3', 'C2', 'C3', 'C4',
    'B1.1', 'B1.2', 'B2', 'B3', 'B4', 'B5',
    'S1', 'S2', 'S3', 'S4', 'S5',
    'R1', 'R2', 'R3', 'R4', 'R5', 'R6',
)

# 定性特征大类：学业 / 健康 / 个人 / 其他
QUAL_CATEGORIES: Tuple[str, ...] = ('A', 'H', 'P', 'O')

MISS_TIER_CODES: Tuple[str, ...] = ('M1.1', 'M1.2', 'M1.3', 'M1.4')


def code_to_attr(code: str) -> str:
    return code.replace('.', '_')


class Intervention(str, Enum):
    """干预措施标识，值即规范编码"""
    C1_1 = 'C1.1'
    C1_2 = 'C1.2'
    C1_3 = 'C1.3'
    C2 = 'C2'
    C3 = 'C3'
    C4 = 'C4'
    B1_1 = 'B1.1'
    B1_2 = 'B1.2'
    B2 = 'B2'
    B3 = 'B3'
    B4 = 'B4'
    B5 = 'B5'
    S1 = 'S1'
    S2 = 'S2'
    S3 = 'S3'
    S4 = 'S4'
    S5 = 'S5'
    R1 = 'R1'
    R2 = 'R2'
    R3 = 'R3'
    R4 = 'R4'
    R5 = 'R5'
    R6 = 'R6'

    def __str__(self):
        return self.value


_INTERVENTIONS = {item.value: item for item in Intervention}


def intervention_parse(code: str) -> Intervention:
    """
    规范编码 -> 干预标识（区分大小写）

    Raises:
        UnknownCode: 不是 23 个干预编码之一
    """
    try:
        return _INTERVENTIONS[code]
    except (KeyError, TypeError):
        raise UnknownCode(code) from None


def check_trigger(code: str) -> str:
    if code not in TRIGGER_CODES:
        raise UnknownCode(code)
    return code


class FlagSet:
    """
    布尔标志向量的公共行为

    子类是 frozen dataclass，每个字段对应一个规范编码（点号换成下划线）。
    序列化为按规范顺序排列的真值编码列表。
    """
    CODES: ClassVar[Tuple[str, ...]] = ()

    @classmethod
    def from_codes(cls, codes: Iterable[str]):
        wanted = set(codes)
        for code in wanted:
            if code not in cls.CODES:
                raise UnknownCode(code)
        return cls(**{code_to_attr(code): True for code in wanted})

    @classmethod
    def from_vector(cls, vector) -> 'FlagSet':
        values = np.asarray(vector).ravel()
        if values.shape[0] != len(cls.CODES):
            raise ValueError(f"{cls.__name__} 需要长度 {len(cls.CODES)} 的向量, 实际 {values.shape[0]}")
        return cls(**{code_to_attr(code): bool(v >= 0.5) for code, v in zip(cls.CODES, values)})

    def codes(self) -> List[str]:
        return [code for code in self.CODES if getattr(self, code_to_attr(code))]

    def to_vector(self) -> np.ndarray:
        return np.array([1.0 if getattr(self, code_to_attr(c)) else 0.0 for c in self.CODES])

    def with_flags(self, **changes) -> 'FlagSet':
        """按规范编码修改标志，例如 with_flags(**{'H1.2': True})"""
        return replace(self, **{code_to_attr(code): bool(v) for code, v in changes.items()})

    def __getitem__(self, code: str) -> bool:
        if code not in self.CODES:
            raise UnknownCode(code)
        return getattr(self, code_to_attr(code))

    def __iter__(self) -> Iterator[str]:
        return iter(self.codes())

    def __len__(self) -> int:
        return len(self.codes())

    def __bool__(self) -> bool:
        return any(getattr(self, f.name) for f in fields(self))

    def __str__(self):
        return '{' + ', '.join(self.codes()) + '}'


@dataclass(frozen=True)
class QuantFeatures(FlagSet):
    """定量特征：成绩相关 G* 与缺交周报 M*"""
    CODES: ClassVar[Tuple[str, ...]] = QUANT_CODES

    G1_1: bool = False
    G1_2: bool = False
    G2_1: bool = False
    G2_2: bool = False
    G3_1: bool = False
    G3_2: bool = False
    G3_3: bool = False
    M1_1: bool = False
    M1_2: bool = False
    M1_3: bool = False
    M1_4: bool = False
    M2_1: bool = False
    M2_2: bool = False


@dataclass(frozen=True)
class QualFeatures(FlagSet):
    """定性特征：从周记文本中抽取的学业 A*、健康 H*、个人 P* 与其他 O"""
    CODES: ClassVar[Tuple[str, ...]] = QUAL_CODES

    A1: bool = False
    A2: bool = False
    A3: bool = False
    A4: bool = False
    H1_1: bool = False
    H1_2: bool = False
    H2: bool = False
    P1: bool = False
    P2_1: bool = False
    P2_2: bool = False
    P3: bool = False
    P4: bool = False
    P5: bool = False
    O: bool = False

    @property
    def ill(self) -> bool:
        return self.H1_1 or self.H1_2


Code = Union[str, Intervention]


@dataclass(frozen=True)
class InterventionSet(FlagSet):
    """干预集合，集合语义（并集幂等）"""
    CODES: ClassVar[Tuple[str, ...]] = INTERVENTION_CODES

    C1_1: bool = False
    C1_2: bool = False
    C1_3: bool = False
    C2: bool = False
    C3: bool = False
    C4: bool = False
    B1_1: bool = False
    B1_2: bool = False
    B2: bool = False
    B3: bool = False
    B4: bool = False
    B5: bool = False
    S1: bool = False
    S2: bool = False
    S3: bool = False
    S4: bool = False
    S5: bool = False
    R1: bool = False
    R2: bool = False
    R3: bool = False
    R4: bool = False
    R5: bool = False
    R6: bool = False

    @classmethod
    def of(cls, *codes: Code) -> 'InterventionSet':
        return cls.from_codes(str(intervention_parse(str(c))) for c in codes)

    def __contains__(self, code: Code) -> bool:
        return self[str(code)]

    def __or__(self, other: 'InterventionSet') -> 'InterventionSet':
        return InterventionSet.from_codes(set(self.codes()) | set(other.codes()))

    def __and__(self, other: 'InterventionSet') -> 'InterventionSet':
        return InterventionSet.from_codes(set(self.codes()) & set(other.codes()))

    def __sub__(self, other: 'InterventionSet') -> 'InterventionSet':
        return InterventionSet.from_codes(set(self.codes()) - set(other.codes()))


EMPTY_INTERVENTIONS = InterventionSet()
