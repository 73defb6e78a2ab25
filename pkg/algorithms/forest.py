"""
随机森林：每个干预一组自助采样的 CART，多数投票
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Mapping, Optional, Union

import numpy as np
from joblib import Parallel, delayed

from domain.errors import InvalidConfig
from .cart import CartParams, DecisionTree, FeatureBins, Rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ForestParams:
    """
    随机森林超参数

    min_rule_frequency 用于规则提取过滤：规则需在至少该比例的训练样本上成立。
    """
    tree_count: int = 100
    max_depth: int = 15
    min_rule_frequency: float = 0.1
    bootstrap_seed: int = 42
    bootstrap: bool = True
    max_features: Union[None, int, str] = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    class_weight: Optional[str] = None
    max_rules_per_target: int = 10

    def __post_init__(self):
        if int(self.tree_count) < 1:
            raise InvalidConfig("tree_count 必须 ≥ 1")
        if not 0 < float(self.min_rule_frequency) <= 1:
            raise InvalidConfig(f"min_rule_frequency 必须在 (0, 1] 内: {self.min_rule_frequency}")
        # 其余约束交给 CartParams 校验
        self.tree_params()

    def tree_params(self) -> CartParams:
        return CartParams(max_depth=self.max_depth, min_samples_split=self.min_samples_split,
                          min_samples_leaf=self.min_samples_leaf, class_weight=self.class_weight,
                          max_rules_per_target=self.max_rules_per_target, min_samples_for_rule=1,
                          max_features=self.max_features)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'ForestParams':
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class TreeEnsemble:
    """
    单个干预的树集合

    Attributes:
        trees: 各棵树
        rules: 通过频率过滤后的规则
    """

    def __init__(self, trees: List[DecisionTree], rules: Optional[List[Rule]] = None):
        self.trees = trees
        self.rules = rules or []

    def votes(self, X: np.ndarray) -> np.ndarray:
        """每个样本投正类的树数"""
        return np.sum([tree.predict(X) for tree in self.trees], axis=0)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """多数投票，平票判负"""
        return (2 * self.votes(X) > len(self.trees)).astype(int)

    @property
    def degenerate(self) -> bool:
        return all(tree.degenerate for tree in self.trees)

    def to_dict(self) -> Dict[str, Any]:
        return {'trees': [tree.to_dict() for tree in self.trees],
                'rules': [rule.to_dict() for rule in self.rules]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], params: CartParams) -> 'TreeEnsemble':
        return cls([DecisionTree.from_dict(t, params) for t in data['trees']],
                   [Rule.from_dict(r) for r in data.get('rules', [])])


def bootstrap_multiplicity(n: int, rng: np.random.Generator) -> np.ndarray:
    """有放回抽取 n 个样本，返回每个样本被抽中的次数"""
    return np.bincount(rng.integers(0, n, size=n), minlength=n)


def frequent_rules(trees: List[DecisionTree], X: np.ndarray, min_frequency: float, limit: int) -> List[Rule]:
    """
    汇总各树的正类路径，去重后保留在至少 min_frequency 比例训练样本上成立的规则

    按成立比例降序、规则文本升序排序，至多 limit 条。
    """
    seen = {}
    for tree in trees:
        for rule in tree.rules(min_support=1):
            seen.setdefault(rule.conditions, rule)
    scored = []
    for rule in seen.values():
        frequency = float(rule.fires(X).mean())
        if frequency >= min_frequency:
            scored.append((-frequency, rule.text(), rule))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [rule for _, _, rule in scored[:limit]]


def fit_ensemble(bins: FeatureBins, y: np.ndarray, params: ForestParams, target: int) -> TreeEnsemble:
    """
    训练一个干预的森林

    第 k 棵树使用 default_rng([bootstrap_seed, target, k])，与并行顺序无关。
    """
    tree_params = params.tree_params()
    n = len(y)
    trees = []
    for k in range(params.tree_count):
        rng = np.random.default_rng([params.bootstrap_seed, target, k])
        multiplicity = bootstrap_multiplicity(n, rng) if params.bootstrap else None
        trees.append(DecisionTree(tree_params).fit(bins, y, multiplicity, rng))
    rules = frequent_rules(trees, bins.X, params.min_rule_frequency, params.max_rules_per_target)
    return TreeEnsemble(trees, rules)


def fit_forest(bins: FeatureBins, Y: np.ndarray, params: ForestParams, n_jobs: int = 1) -> List[TreeEnsemble]:
    """每个干预一组树，并行训练，按目标顺序返回"""
    ensembles = Parallel(n_jobs=n_jobs)(
        delayed(fit_ensemble)(bins, Y[:, t], params, t) for t in range(Y.shape[1])
    )
    logger.debug("随机森林训练完成 targets=%d trees=%d", len(ensembles), params.tree_count)
    return list(ensembles)
