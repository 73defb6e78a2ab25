"""
全规模合成基准：227 名学生 x 15 周，按学生留出 30%
默认不运行：pytest -m slow
"""
import logging
import time

import pytest

from algorithms import Dataset, ForestParams, encode, train_cart, train_forest, train_mlp
from config import COHORT_CONFIG, EVAL_CONFIG, RANDOM_SEED
from features import extract_quant
from synthcohort import CohortConfig, generate_cohort
from utils import compare_predictors, split_students, truth_matrix

logger = logging.getLogger(__name__)

pytestmark = pytest.mark.slow


@pytest.fixture(scope='module')
def benchmark(fall_calendar, catalog, bank, table, overlay):
    config = CohortConfig(COHORT_CONFIG['student_count'], fall_calendar, catalog, COHORT_CONFIG['archetype_mix'],
                          seed=RANDOM_SEED)
    cohort = generate_cohort(config, bank, table, overlay)
    samples = []
    decisions = iter(cohort.decisions)
    for semester, qual in zip(cohort.semesters, cohort.true_qual):
        for week, (quant, flags) in enumerate(zip(extract_quant(semester), qual), start=1):
            samples.append(encode(week, semester.calendar, quant, flags, next(decisions).interventions,
                                  semester.student_id))
    dataset = Dataset.from_samples(samples)
    train_students, test_students = split_students(dataset.students(), EVAL_CONFIG['test_fraction'], RANDOM_SEED)
    train, test = dataset.select_students(train_students), dataset.select_students(test_students)

    start = time.time()
    models = {
        'cart': train_cart(train, n_jobs=-1),
        'forest': train_forest(train, ForestParams(bootstrap_seed=RANDOM_SEED), n_jobs=-1),
        'mlp': train_mlp(train),
    }
    predictions = {'rule_engine': test.Y.astype(int)}
    predictions.update({kind: model.predict_dataset(test) for kind, model in models.items()})
    truth = truth_matrix(cohort.truth, test.keys)
    result = compare_predictors(predictions, truth, test.keys, level=0.90, resamples=1000, seed=RANDOM_SEED)
    elapsed = time.time() - start
    logger.info("基准完成 entries=%d elapsed=%.1fs\n%s", len(dataset), elapsed, result.format())
    return {'dataset': dataset, 'result': result, 'elapsed': elapsed}


def test_corpus_size(benchmark):
    assert 3300 <= len(benchmark['dataset']) <= 3500


@pytest.mark.parametrize('method,floor', [('cart', 0.93), ('forest', 0.94), ('mlp', 0.94)])
def test_held_out_f1(benchmark, method, floor):
    evaluation = {e.method: e for e in benchmark['result'].evaluations}[method]
    assert evaluation.report.f1 >= floor


def test_intervals_are_narrow(benchmark):
    for evaluation in benchmark['result'].evaluations[1:]:
        assert evaluation.intervals['f1'].half_width <= 0.02


def test_runtime(benchmark):
    assert benchmark['elapsed'] < 300
