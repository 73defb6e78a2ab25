"""
预测模型封装
统一 CART / 随机森林 / MLP 的训练、推理与序列化
模型文件为带版本号的 JSON（键排序，无时间戳），相同输入得到相同字节
"""
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from domain.codes import InterventionSet
from domain.errors import EmptyDataset, FeatureMapMismatch, InvalidConfig
from .cart import CartParams, DecisionTree, FeatureBins, fit_cart
from .encoding import FEATURE_NAMES, LABEL_NAMES, Dataset, EncodedSample
from .forest import ForestParams, TreeEnsemble, fit_forest
from .mlp import MlpParams, MultiLabelMlp, fit_mlp

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
MODEL_KINDS = ('cart', 'forest', 'mlp')


@dataclass
class PredictorModel:
    """
    训练好的预测模型

    Attributes:
        kind: cart / forest / mlp
        params: 超参数对象
        estimators: 每个干预一个分类器（cart/forest）
        network: 多输出网络（mlp）
        feature_names / label_names: 特征与标签顺序
        metadata: 种子、参数、数据集哈希、训练指标等
    """
    kind: str
    params: Union[CartParams, ForestParams, MlpParams]
    estimators: List[Union[DecisionTree, TreeEnsemble]] = field(default_factory=list)
    network: Optional[MultiLabelMlp] = None
    feature_names: Sequence[str] = FEATURE_NAMES
    label_names: Sequence[str] = LABEL_NAMES
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidConfig(f"未知模型类型: {self.kind}")
        if self.kind == 'mlp':
            if self.network is None or self.network.n_outputs != len(self.label_names):
                raise InvalidConfig("MLP 输出宽度必须等于干预数")
        elif len(self.estimators) != len(self.label_names):
            raise InvalidConfig(f"{self.kind} 需要 {len(self.label_names)} 个分类器, 实际 {len(self.estimators)}")

    def check_features(self, feature_names: Sequence[str]):
        if tuple(feature_names) != tuple(self.feature_names):
            raise FeatureMapMismatch(f"特征顺序与模型不一致: {list(feature_names)[:3]}...")

    def predict(self, X: np.ndarray, feature_names: Sequence[str] = FEATURE_NAMES) -> np.ndarray:
        """
        批量预测

        Returns:
            np.ndarray: (n, 23) 的 0/1 矩阵
        """
        self.check_features(feature_names)
        X = np.asarray(X, dtype=float).reshape(-1, len(self.feature_names))
        if self.kind == 'mlp':
            return self.network.predict(X)
        return np.column_stack([est.predict(X) for est in self.estimators]).astype(int)

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        return self.predict(dataset.X, dataset.feature_names)

    def rules(self) -> Dict[str, List[str]]:
        """每个干预提取的规则文本（仅树模型）"""
        if self.kind == 'mlp':
            return {}
        result = {}
        for code, est in zip(self.label_names, self.estimators):
            if isinstance(est, TreeEnsemble):
                rules = est.rules
            else:
                rules = est.rules(limit=self.params.max_rules_per_target)
            result[code] = [rule.text(self.feature_names) for rule in rules]
        return result

    # ------------------------------------------------------------------ 序列化

    def to_dict(self) -> Dict[str, Any]:
        body: Dict[str, Any] = {
            'format_version': MODEL_FORMAT_VERSION,
            'kind': self.kind,
            'params': self.params.to_dict(),
            'feature_names': list(self.feature_names),
            'label_names': list(self.label_names),
            'metadata': self.metadata,
        }
        if self.kind == 'mlp':
            body['network'] = self.network.to_dict()
        else:
            body['estimators'] = [est.to_dict() for est in self.estimators]
        return body

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=1)

    def save(self, path: str):
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(self.dumps())
            f.write('\n')
        logger.info("模型已保存 kind=%s path=%s", self.kind, path)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'PredictorModel':
        version = data.get('format_version')
        if version != MODEL_FORMAT_VERSION:
            raise InvalidConfig(f"不支持的模型文件版本: {version}")
        kind = data['kind']
        if kind == 'cart':
            params = CartParams.from_dict(data['params'])
            estimators = [DecisionTree.from_dict(e, params) for e in data['estimators']]
            network = None
        elif kind == 'forest':
            params = ForestParams.from_dict(data['params'])
            estimators = [TreeEnsemble.from_dict(e, params.tree_params()) for e in data['estimators']]
            network = None
        elif kind == 'mlp':
            params = MlpParams.from_dict(data['params'])
            estimators = []
            network = MultiLabelMlp.from_dict(data['network'], params)
        else:
            raise InvalidConfig(f"未知模型类型: {kind}")
        return cls(kind, params, estimators, network, tuple(data['feature_names']),
                   tuple(data['label_names']), dict(data.get('metadata') or {}))

    @classmethod
    def load(cls, path: str) -> 'PredictorModel':
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))


def _training_summary(model: PredictorModel, dataset: Dataset) -> Dict[str, Any]:
    """训练集上的总体与逐干预准确率、正例数"""
    predicted = model.predict_dataset(dataset)
    truth = dataset.Y.astype(int)
    return {
        'train_micro_accuracy': float(np.mean(predicted == truth)),
        'train_accuracy': {code: float(np.mean(predicted[:, t] == truth[:, t]))
                           for t, code in enumerate(model.label_names)},
        'positives': {code: int(truth[:, t].sum()) for t, code in enumerate(model.label_names)},
    }


def _base_metadata(dataset: Dataset, seed: Optional[int]) -> Dict[str, Any]:
    return {'seed': seed, 'dataset_sha256': dataset.digest(), 'n_samples': len(dataset)}


def _require_data(dataset: Dataset):
    if len(dataset) == 0:
        raise EmptyDataset("训练集为空")


def train_cart(dataset: Dataset, params: Optional[CartParams] = None, n_jobs: int = 1) -> PredictorModel:
    """
    训练 CART：每个干预一棵独立的二分类树

    Args:
        dataset: 训练集
        params: 超参数
        n_jobs: 并行训练的进程/线程数

    Returns:
        PredictorModel: kind='cart'

    Raises:
        EmptyDataset: 训练集为空
    """
    _require_data(dataset)
    params = params or CartParams()
    start = time.time()
    trees = fit_cart(FeatureBins(dataset.X), dataset.Y.astype(int), params, n_jobs)
    metadata = _base_metadata(dataset, None)
    metadata['degenerate_targets'] = [code for code, t in zip(LABEL_NAMES, trees) if t.degenerate]
    model = PredictorModel('cart', params, trees, metadata=metadata)
    model.metadata.update(_training_summary(model, dataset))
    logger.info("CART 训练完成 samples=%d elapsed=%.2fs", len(dataset), time.time() - start)
    return model


def train_forest(dataset: Dataset, params: Optional[ForestParams] = None, n_jobs: int = 1) -> PredictorModel:
    """训练随机森林（每个干预一组自助采样树）"""
    _require_data(dataset)
    params = params or ForestParams()
    start = time.time()
    ensembles = fit_forest(FeatureBins(dataset.X), dataset.Y.astype(int), params, n_jobs)
    metadata = _base_metadata(dataset, params.bootstrap_seed)
    metadata['degenerate_targets'] = [code for code, e in zip(LABEL_NAMES, ensembles) if e.degenerate]
    model = PredictorModel('forest', params, ensembles, metadata=metadata)
    model.metadata.update(_training_summary(model, dataset))
    logger.info("随机森林训练完成 samples=%d trees=%d elapsed=%.2fs",
                len(dataset), params.tree_count, time.time() - start)
    return model


def train_mlp(dataset: Dataset, params: Optional[MlpParams] = None, progress: bool = False) -> PredictorModel:
    """
    训练多标签 MLP

    Raises:
        EmptyDataset: 训练集为空
        NonFiniteLoss: 训练损失发散
    """
    _require_data(dataset)
    params = params or MlpParams()
    start = time.time()
    network = fit_mlp(dataset.X, dataset.Y, params, progress=progress)
    metadata = _base_metadata(dataset, params.seed)
    metadata['epoch_losses'] = list(network.epoch_losses)
    model = PredictorModel('mlp', params, network=network, metadata=metadata)
    model.metadata.update(_training_summary(model, dataset))
    logger.info("MLP 训练完成 samples=%d final_loss=%.6f elapsed=%.2fs",
                len(dataset), network.epoch_losses[-1], time.time() - start)
    return model


def train_model(kind: str, dataset: Dataset, params: Mapping[str, Any], n_jobs: int = 1,
                progress: bool = False) -> PredictorModel:
    """按类型名训练（命令行入口使用）"""
    if kind == 'cart':
        return train_cart(dataset, CartParams.from_dict(params), n_jobs)
    if kind == 'forest':
        return train_forest(dataset, ForestParams.from_dict(params), n_jobs)
    if kind == 'mlp':
        return train_mlp(dataset, MlpParams.from_dict(params), progress)
    raise InvalidConfig(f"未知模型类型: {kind}")


def predict(model: PredictorModel, sample: EncodedSample) -> InterventionSet:
    """
    单个样本的干预集合（dropout 关闭，批归一化使用滑动统计量）

    Raises:
        FeatureMapMismatch: 样本特征顺序与模型不一致
    """
    row = model.predict(sample.features.reshape(1, -1), sample.feature_names)[0]
    return InterventionSet.from_vector(row)
