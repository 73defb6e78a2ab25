"""
CART 二分类决策树
按 Gini 不纯度贪心分裂，支持类别权重、自助采样的样本重数和逐节点特征子采样
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from domain.errors import InvalidConfig
from .encoding import FEATURE_NAMES

logger = logging.getLogger(__name__)

# 增益比较容差：只有严格更优才替换，保证并列时取最小特征、最小阈值
GAIN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CartParams:
    """
    CART 超参数

    Attributes:
        max_depth: 最大深度（根为 0）
        min_samples_split: 可分裂节点的最少样本数（按重数计）
        min_samples_leaf: 叶节点最少样本数（按重数计）
        class_weight: "balanced" 或 None
        max_rules_per_target: 每个干预最多提取的规则数
        min_samples_for_rule: 规则对应叶节点的最少样本数
        max_features: 每个节点考虑的特征数（None 为全部，"sqrt" 为平方根）
    """
    max_depth: int = 15
    min_samples_split: int = 15
    min_samples_leaf: int = 5
    class_weight: Optional[str] = 'balanced'
    max_rules_per_target: int = 10
    min_samples_for_rule: int = 10
    max_features: Union[None, int, str] = None

    def __post_init__(self):
        for name in ('max_depth', 'min_samples_split', 'min_samples_leaf', 'max_rules_per_target',
                     'min_samples_for_rule'):
            if int(getattr(self, name)) < 1:
                raise InvalidConfig(f"{name} 必须为正整数")
        if self.class_weight not in (None, 'balanced'):
            raise InvalidConfig(f"class_weight 只能是 balanced 或空: {self.class_weight}")
        if not (self.max_features is None or self.max_features == 'sqrt'
                or (isinstance(self.max_features, int) and self.max_features >= 1)):
            raise InvalidConfig(f"max_features 不合法: {self.max_features}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'CartParams':
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class FeatureBins:
    """
    全局分箱：每个特征的取值排序去重后编号，所有干预目标共用

    codes[i, j] 为样本 i 在特征 j 上的全局箱号（已加特征偏移），一次 bincount 即可得到全部直方图。
    """

    def __init__(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        self.n_features = X.shape[1]
        self.values = [np.unique(X[:, j]) for j in range(self.n_features)]
        self.sizes = np.array([len(v) for v in self.values], dtype=int)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)[:-1]]).astype(int)
        self.total = int(self.sizes.sum())
        self.codes = np.column_stack([
            np.searchsorted(self.values[j], X[:, j]) for j in range(self.n_features)
        ]).astype(int) + self.offsets
        self.X = X


@dataclass(frozen=True)
class Rule:
    """从根到正类叶节点的一条路径"""
    conditions: Tuple[Tuple[int, str, float], ...]
    support: int

    def text(self, names: Sequence[str] = FEATURE_NAMES) -> str:
        if not self.conditions:
            return 'ALWAYS'
        return ' AND '.join(f"{names[f]} {op} {thr:.4g}" for f, op, thr in self.conditions)

    def fires(self, X: np.ndarray) -> np.ndarray:
        mask = np.ones(X.shape[0], dtype=bool)
        for f, op, thr in self.conditions:
            mask &= (X[:, f] <= thr) if op == '<=' else (X[:, f] > thr)
        return mask

    def to_dict(self) -> Dict[str, Any]:
        return {'conditions': [[f, op, thr] for f, op, thr in self.conditions], 'support': self.support}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'Rule':
        return cls(tuple((int(f), str(op), float(thr)) for f, op, thr in data['conditions']), int(data['support']))


class DecisionTree:
    """
    单个干预的二分类树

    节点以平行数组保存：feature < 0 表示叶节点。
    """

    def __init__(self, params: CartParams):
        self.params = params
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[int] = []
        self.n_samples: List[int] = []
        self.weights: List[Tuple[float, float]] = []
        self.depth: List[int] = []
        self.degenerate = False

    # ------------------------------------------------------------------ 训练

    def fit(self, bins: FeatureBins, y: np.ndarray, multiplicity: Optional[np.ndarray] = None,
            rng: Optional[np.random.Generator] = None) -> 'DecisionTree':
        """
        训练

        Args:
            bins: 全局分箱
            y: 0/1 标签
            multiplicity: 每个样本的重数（自助采样时使用，默认全 1）
            rng: 逐节点特征子采样用的随机数生成器

        Returns:
            DecisionTree: self
        """
        y = np.asarray(y).astype(int)
        m = np.ones(len(y), dtype=int) if multiplicity is None else np.asarray(multiplicity, dtype=int)
        counts = np.array([m[y == 0].sum(), m[y == 1].sum()], dtype=float)
        if self.params.class_weight == 'balanced' and counts.min() > 0:
            class_weight = counts.sum() / (2.0 * counts)
        else:
            class_weight = np.ones(2)
        self._bins = bins
        self._y = y
        self._m = m
        self._sw = m * class_weight[y]
        self._rng = rng

        rows = np.flatnonzero(m > 0)
        if counts.min() == 0:
            self.degenerate = True
            self._add_node(rows, 0)
        else:
            self._grow(rows, 0)
        del self._bins, self._y, self._m, self._sw, self._rng
        return self

    def _add_node(self, rows: np.ndarray, depth: int) -> int:
        w0 = float(self._sw[rows][self._y[rows] == 0].sum())
        w1 = float(self._sw[rows][self._y[rows] == 1].sum())
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(1 if w1 > w0 else 0)
        self.n_samples.append(int(self._m[rows].sum()))
        self.weights.append((w0, w1))
        self.depth.append(depth)
        return len(self.feature) - 1

    def _grow(self, rows: np.ndarray, depth: int) -> int:
        node = self._add_node(rows, depth)
        w0, w1 = self.weights[node]
        if (depth >= self.params.max_depth or self.n_samples[node] < self.params.min_samples_split
                or w0 == 0 or w1 == 0):
            return node
        split = self._best_split(rows)
        if split is None:
            return node
        feature, threshold = split
        go_left = self._bins.X[rows, feature] <= threshold
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = self._grow(rows[go_left], depth + 1)
        self.right[node] = self._grow(rows[~go_left], depth + 1)
        return node

    def _candidate_features(self) -> np.ndarray:
        n = self._bins.n_features
        k = self.params.max_features
        if k is None or self._rng is None:
            return np.arange(n)
        k = max(1, int(np.sqrt(n))) if k == 'sqrt' else min(int(k), n)
        return np.sort(self._rng.choice(n, size=k, replace=False))

    def _best_split(self, rows: np.ndarray) -> Optional[Tuple[int, float]]:
        bins = self._bins
        codes = bins.codes[rows].ravel()
        f = bins.n_features
        y = self._y[rows]
        sw = self._sw[rows]
        h1 = np.bincount(codes, weights=np.repeat(sw * (y == 1), f), minlength=bins.total)
        h0 = np.bincount(codes, weights=np.repeat(sw * (y == 0), f), minlength=bins.total)
        hn = np.bincount(codes, weights=np.repeat(self._m[rows].astype(float), f), minlength=bins.total)

        total0, total1 = h0[:bins.sizes[0]].sum(), h1[:bins.sizes[0]].sum()
        total = total0 + total1
        parent = total - (total0 ** 2 + total1 ** 2) / total
        min_leaf = self.params.min_samples_leaf

        best_gain = 0.0
        best: Optional[Tuple[int, float]] = None
        for j in self._candidate_features():
            lo, hi = bins.offsets[j], bins.offsets[j] + bins.sizes[j]
            present = np.flatnonzero(hn[lo:hi] > 0)
            if len(present) < 2:
                continue
            c0 = np.cumsum(h0[lo:hi])
            c1 = np.cumsum(h1[lo:hi])
            cn = np.cumsum(hn[lo:hi])
            n_total = cn[-1]
            for b, nxt in zip(present[:-1], present[1:]):
                n_left = cn[b]
                if n_left < min_leaf or n_total - n_left < min_leaf:
                    continue
                l0, l1 = c0[b], c1[b]
                r0, r1 = total0 - l0, total1 - l1
                wl, wr = l0 + l1, r0 + r1
                if wl <= 0 or wr <= 0:
                    continue
                children = (wl - (l0 ** 2 + l1 ** 2) / wl) + (wr - (r0 ** 2 + r1 ** 2) / wr)
                gain = (parent - children) / total
                if gain > best_gain + GAIN_TOLERANCE:
                    best_gain = gain
                    values = bins.values[j]
                    best = (int(j), float((values[b] + values[nxt]) / 2.0))
        return best

    # ------------------------------------------------------------------ 推理

    def predict(self, X: np.ndarray) -> np.ndarray:
        """0/1 预测"""
        X = np.asarray(X, dtype=float)
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        node = np.zeros(X.shape[0], dtype=int)
        for _ in range(max(self.depth) + 1):
            internal = feature[node] >= 0
            if not internal.any():
                break
            idx = np.flatnonzero(internal)
            current = node[idx]
            go_left = X[idx, feature[current]] <= threshold[current]
            node[idx] = np.where(go_left, left[current], right[current])
        return np.asarray(self.value)[node]

    def node_count(self) -> int:
        return len(self.feature)

    def max_depth_reached(self) -> int:
        return max(self.depth)

    def rules(self, min_support: Optional[int] = None, limit: Optional[int] = None) -> List[Rule]:
        """
        正类叶节点路径，按支持度降序（同支持度按条件文本），至多 limit 条
        """
        min_support = self.params.min_samples_for_rule if min_support is None else min_support
        found: List[Rule] = []
        stack = [(0, ())]
        while stack:
            node, path = stack.pop()
            if self.feature[node] < 0:
                if self.value[node] == 1 and self.n_samples[node] >= min_support:
                    found.append(Rule(path, self.n_samples[node]))
                continue
            f, thr = self.feature[node], self.threshold[node]
            stack.append((self.right[node], path + ((f, '>', thr),)))
            stack.append((self.left[node], path + ((f, '<=', thr),)))
        found.sort(key=lambda r: (-r.support, r.text()))
        return found[:limit] if limit is not None else found

    # ------------------------------------------------------------------ 序列化

    def to_dict(self) -> Dict[str, Any]:
        """嵌套节点记录"""
        def node_record(i: int) -> Dict[str, Any]:
            record = {'n_samples': self.n_samples[i], 'value': self.value[i],
                      'weights': [self.weights[i][0], self.weights[i][1]]}
            if self.feature[i] >= 0:
                record.update({'feature': self.feature[i], 'threshold': self.threshold[i],
                               'left': node_record(self.left[i]), 'right': node_record(self.right[i])})
            return record
        return {'degenerate': self.degenerate, 'root': node_record(0)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], params: CartParams) -> 'DecisionTree':
        tree = cls(params)
        tree.degenerate = bool(data.get('degenerate', False))

        def build(record: Mapping[str, Any], depth: int) -> int:
            i = len(tree.feature)
            tree.feature.append(int(record.get('feature', -1)))
            tree.threshold.append(float(record.get('threshold', 0.0)))
            tree.left.append(-1)
            tree.right.append(-1)
            tree.value.append(int(record['value']))
            tree.n_samples.append(int(record['n_samples']))
            tree.weights.append((float(record['weights'][0]), float(record['weights'][1])))
            tree.depth.append(depth)
            if tree.feature[i] >= 0:
                tree.left[i] = build(record['left'], depth + 1)
                tree.right[i] = build(record['right'], depth + 1)
            return i

        build(data['root'], 0)
        return tree

    def __repr__(self):
        return f"DecisionTree(nodes={self.node_count()}, depth={self.max_depth_reached()})"


def _fit_one(bins: FeatureBins, y: np.ndarray, params: CartParams) -> DecisionTree:
    return DecisionTree(params).fit(bins, y)


def fit_cart(bins: FeatureBins, Y: np.ndarray, params: CartParams, n_jobs: int = 1) -> List[DecisionTree]:
    """每个干预一棵树，各目标独立训练（并行时结果仍按目标顺序）"""
    trees = Parallel(n_jobs=n_jobs)(delayed(_fit_one)(bins, Y[:, t], params) for t in range(Y.shape[1]))
    degenerate = [t for t, tree in enumerate(trees) if tree.degenerate]
    if degenerate:
        logger.info("单一类别的干预使用常数分类器 targets=%s", degenerate)
    return list(trees)
