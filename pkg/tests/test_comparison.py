"""
方法对比与可视化测试
"""
import json

import numpy as np
import pandas as pd
import pytest

from utils import Visualizer, compare_predictors, split_students, truth_matrix
from utils.comparison import METHOD_LABELS


@pytest.fixture(scope='module')
def labeled(cohort):
    keys = [(d.student_id, d.semester_week) for d in cohort.decisions]
    return keys, truth_matrix(cohort.truth, keys)


def flip(matrix, fraction, seed):
    rng = np.random.default_rng(seed)
    noisy = matrix.copy()
    mask = rng.random(matrix.shape) < fraction
    noisy[mask] = 1 - noisy[mask]
    return noisy


class TestSplit:

    def test_disjoint_and_complete(self):
        students = [f'S{i:03d}' for i in range(20)]
        train, test = split_students(students, 0.2, seed=4)
        assert len(test) == 4
        assert sorted(train + test) == students
        assert not set(train) & set(test)

    def test_deterministic(self):
        students = [f'S{i:03d}' for i in range(20)]
        assert split_students(students, 0.3, 9) == split_students(list(reversed(students)), 0.3, 9)

    def test_degenerate_inputs(self):
        assert split_students(['S1'], 0.5, 0) == (['S1'], [])
        assert split_students(['S1', 'S2'], 0.0, 0) == (['S1', 'S2'], [])
        assert split_students(['S1', 'S2'], 0.9, 0)[0] != []


class TestCompare:

    def test_rule_engine_against_itself_is_perfect(self, labeled):
        keys, truth = labeled
        result = compare_predictors({'rule_engine': truth}, truth, keys, resamples=100)
        row = result.table().iloc[0]
        assert row['method'] == METHOD_LABELS['rule_engine']
        assert row['accuracy'] == row['f1'] == 1.0
        assert row['f1_ci'] == 0.0

    def test_label_noise_lowers_scores(self, labeled):
        keys, truth = labeled
        noisy = flip(truth, 0.1, seed=2)
        result = compare_predictors({'rule_engine': truth, 'cart': noisy}, truth, keys, resamples=100)
        table = result.table()
        assert list(table['method']) == ['Rule-based', 'CART']
        assert table.loc[1, 'accuracy'] < 1.0
        assert table.loc[1, 'accuracy'] == pytest.approx(1 - np.mean(noisy != truth))
        ci = result.evaluations[1].intervals['accuracy']
        assert ci.lower <= ci.point <= ci.upper

    def test_single_student_skips_intervals(self, labeled):
        keys, truth = labeled
        rows = [i for i, (student, _) in enumerate(keys) if student == keys[0][0]]
        result = compare_predictors({'mlp': truth[rows]}, truth[rows], [keys[i] for i in rows])
        assert result.evaluations[0].intervals == {}
        assert np.isnan(result.table().loc[0, 'f1_ci'])

    def test_save_and_format(self, labeled, tmp_path):
        keys, truth = labeled
        result = compare_predictors({'rule_engine': truth, 'forest': flip(truth, 0.05, 1)}, truth, keys,
                                    resamples=100)
        table_path, report_path, breakdown_path = (str(tmp_path / n) for n in
                                                   ('comparison.tsv', 'comparison.json', 'per_intervention.tsv'))
        result.save(table_path, report_path, breakdown_path)
        assert list(pd.read_csv(table_path, sep='\t')['method']) == ['Rule-based', 'Random Forest']
        with open(report_path, 'r', encoding='utf-8') as f:
            assert [m['method'] for m in json.load(f)['methods']] == ['rule_engine', 'forest']
        breakdown = pd.read_csv(breakdown_path, sep='\t', index_col='intervention')
        assert breakdown.shape == (23, 2)
        text = result.format()
        assert text.splitlines()[0].startswith('Method')
        assert 'Random Forest' in text and '%' in text


class TestVisualizer:

    def test_plots_written(self, labeled, tmp_path):
        keys, truth = labeled
        result = compare_predictors({'rule_engine': truth, 'cart': flip(truth, 0.1, 3)}, truth, keys,
                                    resamples=100)
        viz = Visualizer()
        bars, heat = tmp_path / 'bars.png', tmp_path / 'heat.png'
        viz.plot_performance_bars(result.table(), save_path=str(bars))
        viz.plot_f1_heatmap(result.per_intervention(), save_path=str(heat))
        assert bars.stat().st_size > 0
        assert heat.stat().st_size > 0
