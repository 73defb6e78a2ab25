"""
多标签多层感知机
全连接 -> 批归一化 -> ReLU -> 反向 dropout，输出层 sigmoid，逐元素二元交叉熵 + L2
纯 numpy 实现前向与反向传播
"""
import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit
from tqdm import tqdm

from domain.errors import EmptyDataset, InvalidConfig, NonFiniteLoss

logger = logging.getLogger(__name__)

BN_MOMENTUM = 0.99
BN_EPS = 1e-5
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class MlpParams:
    layer_widths: Tuple[int, ...] = (256, 128, 64)
    dropout_rate: float = 0.3
    l2_coefficient: float = 0.001
    batch_norm: bool = True
    epochs: int = 100
    learning_rate: float = 0.001
    batch_size: int = 32
    optimizer: str = 'adam'
    seed: int = 42
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, 'layer_widths', tuple(int(w) for w in self.layer_widths))
        if not self.layer_widths or min(self.layer_widths) < 1:
            raise InvalidConfig(f"隐藏层宽度必须为正: {self.layer_widths}")
        if not 0 <= self.dropout_rate < 1:
            raise InvalidConfig(f"dropout_rate 必须在 [0, 1) 内: {self.dropout_rate}")
        if self.l2_coefficient < 0 or self.learning_rate <= 0:
            raise InvalidConfig("l2_coefficient 不能为负，learning_rate 必须为正")
        if self.epochs < 1 or self.batch_size < 2:
            raise InvalidConfig("epochs ≥ 1 且 batch_size ≥ 2")
        if self.optimizer not in ('adam', 'sgd'):
            raise InvalidConfig(f"未知优化器: {self.optimizer}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> 'MlpParams':
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d['layer_widths'] = list(self.layer_widths)
        return d


class MultiLabelMlp:
    """
    多标签 MLP

    参数以有序字典保存，键名如 hidden.0.weight / hidden.0.gamma / output.bias；
    批归一化的滑动统计量单独保存在 buffers 中。
    """

    def __init__(self, n_inputs: int, n_outputs: int, params: MlpParams):
        self.n_inputs = n_inputs
        self.n_outputs = n_outputs
        self.params = params
        self.tensors: 'OrderedDict[str, np.ndarray]' = OrderedDict()
        self.buffers: 'OrderedDict[str, np.ndarray]' = OrderedDict()
        self.epoch_losses: List[float] = []

    # ------------------------------------------------------------------ 初始化

    def initialize(self, rng: np.random.Generator) -> 'MultiLabelMlp':
        """He 均匀初始化：U(-√(6/fan_in), √(6/fan_in))"""
        fan_in = self.n_inputs
        for i, width in enumerate(self.params.layer_widths):
            limit = np.sqrt(6.0 / fan_in)
            self.tensors[f'hidden.{i}.weight'] = rng.uniform(-limit, limit, size=(fan_in, width))
            if self.params.batch_norm:
                self.tensors[f'hidden.{i}.gamma'] = np.ones(width)
                self.tensors[f'hidden.{i}.beta'] = np.zeros(width)
                self.buffers[f'hidden.{i}.running_mean'] = np.zeros(width)
                self.buffers[f'hidden.{i}.running_var'] = np.ones(width)
            else:
                self.tensors[f'hidden.{i}.bias'] = np.zeros(width)
            fan_in = width
        limit = np.sqrt(6.0 / fan_in)
        self.tensors['output.weight'] = rng.uniform(-limit, limit, size=(fan_in, self.n_outputs))
        self.tensors['output.bias'] = np.zeros(self.n_outputs)
        return self

    # ------------------------------------------------------------------ 前向/反向

    def forward(self, X: np.ndarray, training: bool = False, rng: Optional[np.random.Generator] = None,
                dropout: Optional[float] = None, update_stats: bool = True) -> Tuple[np.ndarray, List[Dict]]:
        """
        前向传播

        Args:
            X: (n, d) 输入
            training: 训练模式（批统计量 + dropout）
            rng: dropout 掩码的随机数生成器
            dropout: 覆盖 dropout 比例（梯度检验时置 0）
            update_stats: 训练模式下是否更新滑动统计量

        Returns:
            Tuple: 输出 logits 与反向传播缓存
        """
        p = self.params.dropout_rate if dropout is None else dropout
        a = X
        caches: List[Dict] = []
        for i in range(len(self.params.layer_widths)):
            cache = {'input': a}
            z = a @ self.tensors[f'hidden.{i}.weight']
            if self.params.batch_norm:
                if training:
                    mean, var = z.mean(axis=0), z.var(axis=0)
                    if update_stats:
                        rm, rv = f'hidden.{i}.running_mean', f'hidden.{i}.running_var'
                        self.buffers[rm] = BN_MOMENTUM * self.buffers[rm] + (1 - BN_MOMENTUM) * mean
                        self.buffers[rv] = BN_MOMENTUM * self.buffers[rv] + (1 - BN_MOMENTUM) * var
                else:
                    mean = self.buffers[f'hidden.{i}.running_mean']
                    var = self.buffers[f'hidden.{i}.running_var']
                inv_std = 1.0 / np.sqrt(var + BN_EPS)
                xhat = (z - mean) * inv_std
                h = self.tensors[f'hidden.{i}.gamma'] * xhat + self.tensors[f'hidden.{i}.beta']
                cache.update(xhat=xhat, inv_std=inv_std)
            else:
                h = z + self.tensors[f'hidden.{i}.bias']
            cache['pre_activation'] = h
            a = np.maximum(h, 0.0)
            if training and p > 0:
                mask = (rng.random(a.shape) >= p) / (1.0 - p)
                a = a * mask
                cache['mask'] = mask
            caches.append(cache)
        caches.append({'input': a})
        logits = a @ self.tensors['output.weight'] + self.tensors['output.bias']
        return logits, caches

    def loss(self, logits: np.ndarray, Y: np.ndarray) -> float:
        """逐元素二元交叉熵均值 + λ·ΣW²"""
        bce = np.mean(np.logaddexp(0.0, logits) - Y * logits)
        penalty = sum(np.sum(w ** 2) for name, w in self.tensors.items() if name.endswith('weight'))
        return float(bce + self.params.l2_coefficient * penalty)

    def backward(self, logits: np.ndarray, Y: np.ndarray, caches: List[Dict]) -> Dict[str, np.ndarray]:
        """损失对每个参数张量的梯度"""
        l2 = self.params.l2_coefficient
        grads: Dict[str, np.ndarray] = {}
        dz = (expit(logits) - Y) / Y.size
        a = caches[-1]['input']
        grads['output.weight'] = a.T @ dz + 2 * l2 * self.tensors['output.weight']
        grads['output.bias'] = dz.sum(axis=0)
        da = dz @ self.tensors['output.weight'].T

        for i in reversed(range(len(self.params.layer_widths))):
            cache = caches[i]
            if 'mask' in cache:
                da = da * cache['mask']
            dh = da * (cache['pre_activation'] > 0)
            if self.params.batch_norm:
                xhat, inv_std = cache['xhat'], cache['inv_std']
                grads[f'hidden.{i}.gamma'] = np.sum(dh * xhat, axis=0)
                grads[f'hidden.{i}.beta'] = dh.sum(axis=0)
                dxhat = dh * self.tensors[f'hidden.{i}.gamma']
                n = dh.shape[0]
                dz = inv_std / n * (n * dxhat - dxhat.sum(axis=0) - xhat * np.sum(dxhat * xhat, axis=0))
            else:
                grads[f'hidden.{i}.bias'] = dh.sum(axis=0)
                dz = dh
            weight = self.tensors[f'hidden.{i}.weight']
            grads[f'hidden.{i}.weight'] = cache['input'].T @ dz + 2 * l2 * weight
            da = dz @ weight.T
        return grads

    # ------------------------------------------------------------------ 训练

    def fit(self, X: np.ndarray, Y: np.ndarray, progress: bool = False) -> 'MultiLabelMlp':
        """
        小批量训练

        Raises:
            EmptyDataset: 没有样本
            NonFiniteLoss: 某个批次的损失不是有限值
        """
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.shape[0] == 0:
            raise EmptyDataset("MLP 训练集为空")
        rng = np.random.default_rng(self.params.seed)
        self.initialize(rng)
        moments = {name: (np.zeros_like(t), np.zeros_like(t)) for name, t in self.tensors.items()}
        beta1, beta2 = ADAM_BETAS
        step = 0
        n = X.shape[0]
        size = self.params.batch_size
        self.epoch_losses = []

        for epoch in tqdm(range(self.params.epochs), desc='MLP', disable=None if progress else True):
            order = rng.permutation(n)
            batch_losses = []
            for b, start in enumerate(range(0, n, size)):
                rows = order[start:start + size]
                # 批归一化需要至少两个样本
                if len(rows) < 2:
                    continue
                logits, caches = self.forward(X[rows], training=True, rng=rng)
                value = self.loss(logits, Y[rows])
                if not np.isfinite(value):
                    raise NonFiniteLoss(epoch + 1, b, value)
                batch_losses.append(value)
                grads = self.backward(logits, Y[rows], caches)
                step += 1
                for name, g in grads.items():
                    if self.params.optimizer == 'sgd':
                        self.tensors[name] -= self.params.learning_rate * g
                        continue
                    m, v = moments[name]
                    m *= beta1
                    m += (1 - beta1) * g
                    v *= beta2
                    v += (1 - beta2) * g * g
                    m_hat = m / (1 - beta1 ** step)
                    v_hat = v / (1 - beta2 ** step)
                    self.tensors[name] -= self.params.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            epoch_loss = float(np.mean(batch_losses)) if batch_losses else float('nan')
            self.epoch_losses.append(epoch_loss)
            logger.debug("MLP epoch=%d loss=%.6f", epoch + 1, epoch_loss)
        return self

    # ------------------------------------------------------------------ 推理

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(np.asarray(X, dtype=float), training=False)
        return expit(logits)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= self.params.threshold).astype(int)

    # ------------------------------------------------------------------ 序列化

    def to_dict(self) -> Dict[str, Any]:
        """形状 + 行优先展开的十进制数组"""
        def pack(arrays: Mapping[str, np.ndarray]) -> Dict[str, Any]:
            return {name: {'shape': list(a.shape), 'data': [float(x) for x in a.ravel(order='C')]}
                    for name, a in arrays.items()}
        return {'n_inputs': self.n_inputs, 'n_outputs': self.n_outputs,
                'tensors': pack(self.tensors), 'buffers': pack(self.buffers)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], params: MlpParams) -> 'MultiLabelMlp':
        net = cls(int(data['n_inputs']), int(data['n_outputs']), params)

        def unpack(records: Mapping[str, Any]) -> 'OrderedDict[str, np.ndarray]':
            return OrderedDict((name, np.asarray(r['data'], dtype=float).reshape(r['shape']))
                               for name, r in records.items())

        tensors = unpack(data['tensors'])
        buffers = unpack(data.get('buffers', {}))
        # 恢复初始化时的键顺序
        template = cls(net.n_inputs, net.n_outputs, params).initialize(np.random.default_rng(0))
        net.tensors = OrderedDict((name, tensors[name]) for name in template.tensors)
        net.buffers = OrderedDict((name, buffers[name]) for name in template.buffers)
        return net


def gradient_check(net: MultiLabelMlp, X: np.ndarray, Y: np.ndarray, eps: float = 1e-6) -> Dict[str, float]:
    """
    解析梯度与中心差分的比较（float64，关闭 dropout，不更新滑动统计量）

    Returns:
        Dict[str, float]: 每个参数张量的相对误差 ||g_num - g_ana|| / (||g_num|| + ||g_ana||)
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)

    def objective() -> float:
        logits, _ = net.forward(X, training=True, dropout=0.0, update_stats=False)
        return net.loss(logits, Y)

    logits, caches = net.forward(X, training=True, dropout=0.0, update_stats=False)
    analytic = net.backward(logits, Y, caches)
    errors = {}
    for name, tensor in net.tensors.items():
        numeric = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        grad = numeric.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + eps
            plus = objective()
            flat[k] = original - eps
            minus = objective()
            flat[k] = original
            grad[k] = (plus - minus) / (2 * eps)
        denom = np.linalg.norm(numeric) + np.linalg.norm(analytic[name])
        errors[name] = float(np.linalg.norm(numeric - analytic[name]) / denom) if denom > 0 else 0.0
    return errors


def fit_mlp(X: np.ndarray, Y: np.ndarray, params: MlpParams, progress: bool = False) -> MultiLabelMlp:
    return MultiLabelMlp(X.shape[1], Y.shape[1], params).fit(X, Y, progress=progress)
