"""
评估指标测试
"""
import numpy as np
import pandas as pd
import pytest

from domain.codes import INTERVENTION_CODES, InterventionSet
from domain.errors import InsufficientUnits, InvalidConfig, KeyMismatch
from utils import ConfusionCounts, GroundTruthRecord, Metrics, load_labels, truth_from_frame, truth_matrix


def record(student, week, *codes):
    return GroundTruthRecord(student, week, InterventionSet.of(*codes))


class TestMetrics:

    def test_reference_counts(self):
        report = Metrics.metrics(ConfusionCounts(tp=3, tn=4, fp=1, fn=2))
        assert report.accuracy == pytest.approx(0.7)
        assert report.precision == pytest.approx(0.75)
        assert report.recall == pytest.approx(0.6)
        assert report.f1 == pytest.approx(2 / 3, abs=1e-4)

    @pytest.mark.parametrize('counts,expected', [
        ((3, 4, 1, 2), (0.7, 0.75, 0.6, 2 / 3)),
        ((0, 10, 0, 0), (1.0, 0.0, 0.0, 0.0)),
        ((0, 0, 5, 0), (0.0, 0.0, 0.0, 0.0)),
        ((0, 0, 0, 5), (0.0, 0.0, 0.0, 0.0)),
        ((5, 0, 0, 0), (1.0, 1.0, 1.0, 1.0)),
        ((1, 1, 1, 1), (0.5, 0.5, 0.5, 0.5)),
        ((10, 80, 5, 5), (0.9, 2 / 3, 2 / 3, 2 / 3)),
        ((2, 0, 8, 0), (0.2, 0.2, 1.0, 1 / 3)),
        ((8, 0, 0, 2), (0.8, 1.0, 0.8, 8 / 9)),
        ((1, 96, 1, 2), (0.97, 0.5, 1 / 3, 0.4)),
    ])
    def test_fixed_matrices(self, counts, expected):
        tp, tn, fp, fn = counts
        report = Metrics.metrics(ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn))
        observed = (report.accuracy, report.precision, report.recall, report.f1)
        assert observed == pytest.approx(expected, abs=1e-12)

    def test_zero_division(self):
        report = Metrics.metrics(ConfusionCounts(tn=10))
        assert (report.accuracy, report.precision, report.recall, report.f1) == (1.0, 0.0, 0.0, 0.0)
        report = Metrics.metrics(ConfusionCounts(fn=2, tn=1))
        assert report.precision == 0.0 and report.f1 == 0.0
        with pytest.raises(ValueError):
            Metrics.metrics(ConfusionCounts())

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(tp=-1)


class TestConfusion:

    def test_single_week(self):
        table = Metrics.confusion([record('S1', 1, 'R1')], [record('S1', 1, 'R1', 'S1')])
        assert table.micro == ConfusionCounts(tp=1, tn=21, fp=0, fn=1)
        assert table.per_intervention['S1'] == ConfusionCounts(fn=1)
        assert table.per_intervention['C2'] == ConfusionCounts(tn=1)

    def test_micro_is_sum_of_per_intervention(self):
        rng = np.random.default_rng(0)
        P = rng.integers(0, 2, size=(30, 23))
        T = rng.integers(0, 2, size=(30, 23))
        table = Metrics.confusion_arrays(P, T)
        total = ConfusionCounts()
        for counts in table.per_intervention.values():
            total = total + counts
        assert table.micro == total
        assert table.micro.total == 30 * 23

    def test_perfect_prediction(self):
        records = [record('S1', w, 'R1') for w in range(1, 4)]
        report = Metrics.metrics(Metrics.confusion(records, records).micro)
        assert report.accuracy == report.precision == report.recall == report.f1 == 1.0

    def test_key_mismatch(self):
        with pytest.raises(KeyMismatch) as info:
            Metrics.confusion([record('S1', 1)], [record('S1', 2)])
        assert info.value.missing == [('S1', 2)]
        assert info.value.extra == [('S1', 1)]

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            Metrics.confusion_arrays(np.zeros((2, 23)), np.zeros((3, 23)))


class TestBootstrap:

    @pytest.fixture
    def two_students(self):
        # 各 100 格，准确率分别为 0.9 与 1.0
        return {'S1': ConfusionCounts(tp=40, tn=50, fp=5, fn=5), 'S2': ConfusionCounts(tp=50, tn=50)}

    def test_endpoints_are_resample_values(self, two_students):
        ci = Metrics.bootstrap_ci(two_students, level=0.9, resamples=200, seed=1)['accuracy']
        assert ci.point == pytest.approx(0.95)
        assert ci.lower == pytest.approx(0.9) or ci.lower == pytest.approx(0.95)
        assert ci.upper == pytest.approx(1.0) or ci.upper == pytest.approx(0.95)
        assert ci.lower <= ci.point <= ci.upper

    def test_deterministic(self, two_students):
        a = Metrics.bootstrap_ci(two_students, resamples=150, seed=3)
        b = Metrics.bootstrap_ci(two_students, resamples=150, seed=3)
        assert a == b

    def test_needs_two_students(self):
        with pytest.raises(InsufficientUnits):
            Metrics.bootstrap_ci({'S1': ConfusionCounts(tp=1)})

    @pytest.mark.parametrize('kwargs', [{'resamples': 99}, {'level': 1.0}, {'level': 0.0}])
    def test_invalid_arguments(self, two_students, kwargs):
        with pytest.raises(InvalidConfig):
            Metrics.bootstrap_ci(two_students, **kwargs)

    def test_per_student_counts(self):
        P = np.zeros((4, 23), dtype=int)
        T = np.zeros((4, 23), dtype=int)
        T[0, 0] = 1
        counts = Metrics.per_student_counts(P, T, [('S1', 1), ('S1', 2), ('S2', 1), ('S2', 2)])
        assert counts['S1'] == ConfusionCounts(tn=45, fn=1)
        assert counts['S2'] == ConfusionCounts(tn=46)


class TestLabels:

    def test_truth_matrix_order_and_mismatch(self):
        records = [record('S1', 2, 'C2'), record('S1', 1, 'R1')]
        M = truth_matrix(records, [('S1', 1), ('S1', 2)])
        assert M[0, INTERVENTION_CODES.index('R1')] == 1
        assert M[1, INTERVENTION_CODES.index('C2')] == 1
        with pytest.raises(KeyMismatch):
            truth_matrix(records, [('S1', 1)])

    def test_label_file(self, tmp_path):
        rows = [{'student_id': '007', 'semester_week': 1, **{c: int(c == 'B4') for c in INTERVENTION_CODES}}]
        path = tmp_path / 'labels.tsv'
        pd.DataFrame(rows).to_csv(path, sep='\t', index=False)
        loaded = load_labels(str(path), labeler='counselor')
        assert loaded == [GroundTruthRecord('007', 1, InterventionSet.of('B4'), 'counselor')]

    def test_label_frame_needs_every_column(self):
        frame = pd.DataFrame([{'student_id': 'S1', 'semester_week': 1, 'R1': 1}])
        with pytest.raises(InvalidConfig):
            truth_from_frame(frame)

    def test_save_metrics_to_tsv(self, tmp_path):
        path = tmp_path / 'metrics.tsv'
        report = Metrics.metrics(ConfusionCounts(tp=3, tn=4, fp=1, fn=2))
        Metrics.save_metrics_to_tsv({'cart': report.to_dict()}, str(path))
        frame = pd.read_csv(path, sep='\t')
        assert frame.loc[0, 'method'] == 'cart'
        assert frame.loc[0, 'precision'] == pytest.approx(0.75)
