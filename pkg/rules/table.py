"""
规则表与调整规则
规则表：每个触发条件一行（直接干预 + 继承的触发条件），加载时校验编码与继承无环
调整规则：一次性工作坊、缺交降级、冲突组合
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import yaml

from domain.codes import TRIGGER_CODES, InterventionSet, check_trigger, intervention_parse
from domain.errors import CycleDetected, InvalidConfig, UnknownCode
from domain.records import WORKSHOP_CODES

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RuleRow:
    trigger: str
    direct: InterventionSet
    inherits: Tuple[str, ...] = ()


class RuleTable:
    """
    规则表（加载后不可变，可在线程间共享）

    每个触发条件恰好一行；继承关系必须无环。展开结果在构造时预先计算。
    """

    def __init__(self, rows: Iterable[RuleRow]):
        self.rows: Dict[str, RuleRow] = {}
        for row in rows:
            check_trigger(row.trigger)
            if row.trigger in self.rows:
                raise InvalidConfig(f"规则表中触发条件 {row.trigger} 出现多次")
            for parent in row.inherits:
                check_trigger(parent)
            self.rows[row.trigger] = row
        missing = [code for code in TRIGGER_CODES if code not in self.rows]
        if missing:
            raise InvalidConfig(f"规则表缺少触发条件: {missing}")
        self._check_acyclic()
        self._closure: Dict[str, InterventionSet] = {}
        for code in TRIGGER_CODES:
            self._closure[code] = self._expand(code)

    def _check_acyclic(self):
        """深度优先搜索检查继承环"""
        state: Dict[str, int] = {}
        stack: List[str] = []

        def visit(code: str):
            state[code] = 1
            stack.append(code)
            for parent in self.rows[code].inherits:
                if state.get(parent) == 1:
                    raise CycleDetected(stack[stack.index(parent):] + [parent])
                if parent not in state:
                    visit(parent)
            stack.pop()
            state[code] = 2

        for code in TRIGGER_CODES:
            if code not in state:
                visit(code)

    def _expand(self, code: str) -> InterventionSet:
        row = self.rows[code]
        result = row.direct
        for parent in row.inherits:
            result = result | self._expand(parent)
        return result

    def expand(self, trigger: str) -> InterventionSet:
        try:
            return self._closure[trigger]
        except KeyError:
            raise UnknownCode(trigger) from None

    @classmethod
    def from_records(cls, records: Sequence[Mapping[str, Any]]) -> 'RuleTable':
        rows = []
        for record in records:
            try:
                rows.append(RuleRow(
                    trigger=str(record['trigger']),
                    direct=InterventionSet.of(*[str(c) for c in record.get('direct') or ()]),
                    inherits=tuple(str(c) for c in record.get('inherits') or ()),
                ))
            except KeyError as exc:
                raise InvalidConfig(f"规则记录缺少字段 {exc}: {record}") from None
        return cls(rows)

    @classmethod
    def load(cls, path: str) -> 'RuleTable':
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f) or {}
        table = cls.from_records(data.get('rules') or [])
        logger.debug("规则表已加载 path=%s rows=%d", path, len(table.rows))
        return table

    def __len__(self) -> int:
        return len(self.rows)


def expand_rule(table: RuleTable, trigger: str) -> InterventionSet:
    """触发条件的完整干预集合：直接干预并上所有继承条件的展开"""
    return table.expand(trigger)


@dataclass(frozen=True)
class Guard:
    """对本周已触发条件的守卫"""
    all: FrozenSet[str] = frozenset()
    any: FrozenSet[str] = frozenset()
    none: FrozenSet[str] = frozenset()

    def holds(self, fired: FrozenSet[str]) -> bool:
        return (self.all <= fired
                and (not self.any or bool(self.any & fired))
                and not (self.none & fired))


@dataclass(frozen=True)
class ConflictRule:
    """
    冲突组合规则

    Attributes:
        name: 规则名
        when: 守卫
        suppress: 要抑制的干预
        add: 要加入的干预
        scope: 给出时，仅当 scope 之外没有其他触发条件给出该干预才抑制
        reason: 写入审计记录的原因
    """
    name: str
    when: Guard
    suppress: Tuple[str, ...] = ()
    add: Tuple[str, ...] = ()
    scope: Optional[FrozenSet[str]] = None
    reason: str = ''


@dataclass(frozen=True)
class Overlay:
    """规则表之上的调整规则"""
    once_per_semester: Tuple[str, ...] = WORKSHOP_CODES
    deescalation_triggers: FrozenSet[str] = frozenset({'M1.1', 'M1.2', 'M1.3', 'M1.4'})
    deescalation_target: InterventionSet = field(default_factory=lambda: InterventionSet.of('C1.1'))
    conflicts: Tuple[ConflictRule, ...] = ()

    def __post_init__(self):
        for code in self.once_per_semester:
            if code not in WORKSHOP_CODES:
                raise InvalidConfig(f"一次性干预只能是工作坊 {WORKSHOP_CODES}: {code}")
        for code in self.deescalation_triggers:
            check_trigger(code)
        for rule in self.conflicts:
            for code in rule.when.all | rule.when.any | rule.when.none | (rule.scope or frozenset()):
                check_trigger(code)
            for code in rule.suppress + rule.add:
                intervention_parse(code)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Overlay':
        deescalation = data.get('deescalation') or {}
        conflicts = []
        for item in data.get('conflicts') or ():
            when = item.get('when') or {}
            scope = item.get('scope')
            conflicts.append(ConflictRule(
                name=str(item.get('name', f"conflict-{len(conflicts) + 1}")),
                when=Guard(frozenset(when.get('all') or ()), frozenset(when.get('any') or ()),
                           frozenset(when.get('none') or ())),
                suppress=tuple(str(c) for c in item.get('suppress') or ()),
                add=tuple(str(c) for c in item.get('add') or ()),
                scope=frozenset(scope) if scope is not None else None,
                reason=str(item.get('reason', '')),
            ))
        return cls(
            once_per_semester=tuple(data.get('once_per_semester') or ()),
            deescalation_triggers=frozenset(deescalation.get('triggers') or ()),
            deescalation_target=InterventionSet.of(*(deescalation.get('target') or ())),
            conflicts=tuple(conflicts),
        )


def load_overlay(path: str) -> Overlay:
    with open(path, 'r', encoding='utf-8') as f:
        return Overlay.from_dict(yaml.safe_load(f) or {})
