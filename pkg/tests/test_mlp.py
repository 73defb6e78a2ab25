"""
多标签 MLP 测试
"""
import numpy as np
import pytest

from algorithms import MlpParams, MultiLabelMlp, gradient_check, train_mlp
from algorithms.encoding import Dataset, N_FEATURES, N_LABELS
from domain.errors import InvalidConfig, NonFiniteLoss


def toy(n=40, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, 6)).astype(float)
    Y = np.column_stack([X[:, 0], np.logical_or(X[:, 1], X[:, 2]), np.zeros(n)])
    return X, Y


class TestGradients:

    @pytest.mark.parametrize('batch_norm', [True, False])
    def test_gradient_check(self, batch_norm):
        X, Y = toy(12)
        params = MlpParams(layer_widths=(5, 4), dropout_rate=0.0, batch_norm=batch_norm, l2_coefficient=0.01)
        net = MultiLabelMlp(X.shape[1], Y.shape[1], params).initialize(np.random.default_rng(1))
        errors = gradient_check(net, X, Y)
        assert set(errors) == set(net.tensors)
        assert max(errors.values()) < 1e-4

    def test_gradient_check_leaves_stats_alone(self):
        X, Y = toy(12)
        net = MultiLabelMlp(6, 3, MlpParams(layer_widths=(4,))).initialize(np.random.default_rng(2))
        before = {name: b.copy() for name, b in net.buffers.items()}
        gradient_check(net, X, Y)
        assert all(np.array_equal(before[name], net.buffers[name]) for name in before)


class TestTraining:

    def test_loss_decreases(self):
        X, Y = toy(80)
        net = MultiLabelMlp(6, 3, MlpParams(layer_widths=(16, 8), epochs=30, batch_size=16, dropout_rate=0.1))
        net.fit(X, Y)
        assert len(net.epoch_losses) == 30
        assert net.epoch_losses[-1] < net.epoch_losses[0]

    def test_learns_simple_labels(self):
        X, Y = toy(200)
        params = MlpParams(layer_widths=(16,), epochs=80, batch_size=16, dropout_rate=0.0, learning_rate=0.01)
        net = MultiLabelMlp(6, 3, params).fit(X, Y)
        assert np.mean(net.predict(X) == Y) >= 0.95

    def test_all_zero_labels_predict_zero(self):
        X, _ = toy(60)
        params = MlpParams(layer_widths=(8,), epochs=40, batch_size=16, learning_rate=0.01)
        net = MultiLabelMlp(6, 3, params).fit(X, np.zeros((60, 3)))
        assert not net.predict(X).any()

    def test_same_seed_same_weights(self):
        X, Y = toy(40)
        params = MlpParams(layer_widths=(8,), epochs=5, batch_size=8)
        a = MultiLabelMlp(6, 3, params).fit(X, Y)
        b = MultiLabelMlp(6, 3, params).fit(X, Y)
        assert a.to_dict() == b.to_dict()

    def test_non_finite_loss(self):
        X, Y = toy(20)
        X[3, 0] = np.nan
        with pytest.raises(NonFiniteLoss) as info:
            MultiLabelMlp(6, 3, MlpParams(layer_widths=(4,), epochs=3, batch_size=32)).fit(X, Y)
        assert info.value.epoch == 1

    def test_inference_is_deterministic(self):
        X, Y = toy(40)
        net = MultiLabelMlp(6, 3, MlpParams(layer_widths=(8,), epochs=3, batch_size=8)).fit(X, Y)
        assert np.array_equal(net.predict_proba(X), net.predict_proba(X))

    def test_serialization_round_trip(self):
        X, Y = toy(40)
        params = MlpParams(layer_widths=(8, 4), epochs=3, batch_size=8)
        net = MultiLabelMlp(6, 3, params).fit(X, Y)
        again = MultiLabelMlp.from_dict(net.to_dict(), params)
        assert list(again.tensors) == list(net.tensors)
        assert np.allclose(again.predict_proba(X), net.predict_proba(X))

    def test_train_mlp_records_losses(self, rule_dataset):
        subset = rule_dataset.select_students(rule_dataset.students()[:10])
        model = train_mlp(subset, MlpParams(layer_widths=(32, 16), epochs=5))
        assert len(model.metadata['epoch_losses']) == 5
        assert model.predict(rule_dataset.X[:3]).shape == (3, N_LABELS)


class TestParams:

    @pytest.mark.parametrize('kwargs', [{'layer_widths': ()}, {'dropout_rate': 1.0}, {'learning_rate': 0},
                                        {'batch_size': 1}, {'optimizer': 'rmsprop'}])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidConfig):
            MlpParams(**kwargs)

    def test_defaults(self):
        params = MlpParams()
        assert params.layer_widths == (256, 128, 64)
        assert params.to_dict()['layer_widths'] == [256, 128, 64]

    def test_dataset_shape(self):
        data = Dataset(np.zeros((2, N_FEATURES)), np.zeros((2, N_LABELS)))
        assert data.keys == [('', 0), ('', 1)]
