"""
算法模块
包含 CART、随机森林与多标签 MLP 三种干预预测器的实现
"""
from .cart import CartParams, DecisionTree, FeatureBins, Rule
from .encoding import FEATURE_NAMES, LABEL_NAMES, Dataset, EncodedSample, dataset_from_frames, encode
from .forest import ForestParams, TreeEnsemble
from .mlp import MlpParams, MultiLabelMlp, gradient_check
from .model import PredictorModel, predict, train_cart, train_forest, train_mlp, train_model

__all__ = [
    'CartParams', 'DecisionTree', 'FeatureBins', 'Rule',
    'FEATURE_NAMES', 'LABEL_NAMES', 'Dataset', 'EncodedSample', 'dataset_from_frames', 'encode',
    'ForestParams', 'TreeEnsemble',
    'MlpParams', 'MultiLabelMlp', 'gradient_check',
    'PredictorModel', 'predict', 'train_cart', 'train_forest', 'train_mlp', 'train_model',
]
