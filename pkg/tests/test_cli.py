"""
命令行端到端测试：synth -> extract -> train -> evaluate
"""
import json
import os

import pandas as pd
import pytest
import requests
import yaml

import main
from domain.codes import INTERVENTION_CODES, QUAL_CODES
from test_qual_features import FakeResponse, FakeSession, remote_body

SMALL_RUN = {
    'forest': {'tree_count': 3},
    'mlp': {'epochs': 2, 'layer_widths': [16, 8]},
    'eval': {'resamples': 200},
}


def run(*argv):
    return main.main([str(a) for a in argv])


@pytest.fixture(scope='module')
def pipeline(tmp_path_factory):
    """12 名学生的完整流水线，返回各步输出目录"""
    root = tmp_path_factory.mktemp('pipeline')
    config_path = root / 'run.yaml'
    config_path.write_text(yaml.safe_dump(SMALL_RUN), encoding='utf-8')
    dirs = {name: root / name for name in ('synth', 'features', 'models', 'eval')}
    common = ['--config', config_path, '--workers', 1, '--seed', 5]

    codes = {
        'synth': run(*common, '--out', dirs['synth'], 'synth', '--students', 12),
        'extract': run(*common, '--out', dirs['features'], 'extract', '--corpus', dirs['synth'] / 'corpus.json'),
    }
    features = ['--quant', dirs['features'] / 'quant.tsv', '--qual', dirs['features'] / 'qual.tsv']
    codes['train'] = run(*common, '--out', dirs['models'], 'train', *features,
                         '--labels', dirs['synth'] / 'labels.tsv', '--show-rules')
    models = []
    for kind in ('cart', 'forest', 'mlp'):
        models += ['--model', dirs['models'] / f'model_{kind}.json']
    codes['evaluate'] = run(*common, '--out', dirs['eval'], 'evaluate', *features,
                            '--labels', dirs['synth'] / 'labels.tsv', '--split', dirs['models'] / 'split.tsv',
                            '--no-plots', *models)
    return {'root': root, 'dirs': dirs, 'codes': codes, 'common': common, 'features': features}


class TestPipeline:

    def test_every_step_succeeds(self, pipeline):
        assert pipeline['codes'] == {'synth': 0, 'extract': 0, 'train': 0, 'evaluate': 0}

    def test_synth_outputs(self, pipeline):
        synth = pipeline['dirs']['synth']
        for name in ('reports.tsv', 'calendar.yaml', 'catalog.yaml', 'labels.tsv', 'true_qual.tsv',
                     'archetypes.tsv', 'corpus.json', 'manifest.json'):
            assert (synth / name).is_file(), name
        labels = pd.read_csv(synth / 'labels.tsv', sep='\t')
        assert list(labels.columns) == ['student_id', 'semester_week'] + list(INTERVENTION_CODES)
        assert len(labels) == 12 * 15

    def test_feature_matrices(self, pipeline):
        features = pipeline['dirs']['features']
        qual = pd.read_csv(features / 'qual.tsv', sep='\t')
        assert list(qual.columns) == ['student_id', 'semester_week'] + list(QUAL_CODES)
        assert len(qual) == 12 * 15
        with open(features / 'annotation_audit.jsonl', 'r', encoding='utf-8') as f:
            sources = {json.loads(line)['source'] for line in f if line.strip()}
        assert sources == {'fallback'}

    def test_split_and_models(self, pipeline):
        models = pipeline['dirs']['models']
        split = pd.read_csv(models / 'split.tsv', sep='\t')
        assert sorted(split['split'].unique()) == ['test', 'train']
        assert split['student_id'].is_unique and len(split) == 12
        for kind in ('cart', 'forest', 'mlp'):
            with open(models / f'model_{kind}.json', 'r', encoding='utf-8') as f:
                assert json.load(f)['kind'] == kind

    def test_comparison_table(self, pipeline):
        table = pd.read_csv(pipeline['dirs']['eval'] / 'comparison.tsv', sep='\t')
        assert list(table['method']) == ['Rule-based', 'CART', 'Random Forest', 'MLP']
        assert table[['accuracy', 'precision', 'recall', 'f1']].le(1.0).all().all()
        breakdown = pd.read_csv(pipeline['dirs']['eval'] / 'per_intervention_f1.tsv', sep='\t')
        assert len(breakdown) == len(INTERVENTION_CODES)

    def test_manifest(self, pipeline):
        with open(pipeline['dirs']['eval'] / 'manifest.json', 'r', encoding='utf-8') as f:
            manifest = json.load(f)
        assert manifest['command'] == 'evaluate'
        assert manifest['seed'] == 5
        assert manifest['config']['forest']['tree_count'] == 3
        assert 'comparison.tsv' in manifest['outputs']
        assert set(manifest['inputs']) >= {'quant', 'qual', 'labels', 'split', 'model_0'}
        assert 'numpy' in manifest['versions']

    def test_synth_is_reproducible(self, pipeline, tmp_path):
        assert run(*pipeline['common'], '--out', tmp_path, 'synth', '--students', 12) == 0
        for name in ('reports.tsv', 'labels.tsv'):
            assert (tmp_path / name).read_bytes() == (pipeline['dirs']['synth'] / name).read_bytes()

    def test_downstream_steps_are_reproducible(self, pipeline, tmp_path):
        common, dirs = pipeline['common'], pipeline['dirs']
        assert run(*common, '--out', tmp_path / 'features', 'extract',
                   '--corpus', dirs['synth'] / 'corpus.json') == 0
        assert run(*common, '--out', tmp_path / 'models', 'train', *pipeline['features'],
                   '--labels', dirs['synth'] / 'labels.tsv') == 0
        for name in ('quant.tsv', 'qual.tsv'):
            assert (tmp_path / 'features' / name).read_bytes() == (dirs['features'] / name).read_bytes()
        for name in ('model_cart.json', 'model_forest.json', 'model_mlp.json', 'split.tsv'):
            assert (tmp_path / 'models' / name).read_bytes() == (dirs['models'] / name).read_bytes()

    def test_predict_with_rules_and_model(self, pipeline, tmp_path):
        features = pipeline['features']
        assert run('--out', tmp_path / 'rule', '--workers', 1, 'predict', *features) == 0
        decisions = pd.read_csv(tmp_path / 'rule' / 'decisions.tsv', sep='\t')
        assert len(decisions) == 12 * 15
        model = pipeline['dirs']['models'] / 'model_cart.json'
        assert run('--out', tmp_path / 'cart', '--workers', 1, 'predict', *features,
                   '--method', 'cart', '--model', model) == 0
        predictions = pd.read_csv(tmp_path / 'cart' / 'predictions.tsv', sep='\t')
        assert list(predictions.columns[2:]) == list(INTERVENTION_CODES)


class TestExitCodes:

    def test_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            run('--out', tmp_path, 'bogus')
        assert info.value.code == main.EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        assert run('--out', tmp_path, '--config', tmp_path / 'nope.yaml', 'synth') == main.EXIT_USAGE
        with open(tmp_path / 'error.json', 'r', encoding='utf-8') as f:
            assert json.load(f)['error'] == 'InvalidConfig'

    def test_model_kind_mismatch(self, pipeline, tmp_path):
        model = pipeline['dirs']['models'] / 'model_mlp.json'
        code = run('--out', tmp_path, '--workers', 1, 'predict', *pipeline['features'], '--method', 'cart',
                   '--model', model)
        assert code == main.EXIT_USAGE

    def test_label_key_mismatch(self, pipeline, tmp_path):
        labels = pd.read_csv(pipeline['dirs']['synth'] / 'labels.tsv', sep='\t', dtype={'student_id': str})
        short = tmp_path / 'labels.tsv'
        labels.iloc[:-3].to_csv(short, sep='\t', index=False)
        out = tmp_path / 'out'
        code = run(*pipeline['common'], '--out', out, 'evaluate', *pipeline['features'], '--labels', short,
                   '--no-plots')
        assert code == main.EXIT_DATA
        with open(out / 'error.json', 'r', encoding='utf-8') as f:
            record = json.load(f)
        assert record['error'] == 'KeyMismatch'
        assert len(record['details']['missing']) == 3

    def test_ingest_errors_exit_with_data_code(self, tmp_path):
        reports = tmp_path / 'reports.tsv'
        reports.write_text('student_id\treport_week\tcourse_1\tgrade_1\tjournal_cs\tjournal_noncs\tjournal_personal\n'
                           'S1\t1\tCOP3014\tQ\tlab\t\tok\n', encoding='utf-8')
        out = tmp_path / 'out'
        assert run('--out', out, '--workers', 1, 'ingest', '--reports', reports) == main.EXIT_DATA
        assert (out / 'issues.tsv').is_file()
        assert (out / 'error.json').is_file()

    def test_successful_run_clears_old_error(self, tmp_path):
        (tmp_path / 'error.json').write_text('{}', encoding='utf-8')
        assert run('--out', tmp_path, '--workers', 1, 'synth', '--students', 2) == 0
        assert not os.path.exists(tmp_path / 'error.json')


class TestRemoteAnnotation:

    def test_remote_mode_uses_session(self, pipeline, tmp_path, monkeypatch):
        session = FakeSession(FakeResponse(remote_body(P3='misses home')))
        monkeypatch.setattr(main, 'SESSION_FACTORY', lambda: session)
        corpus = pipeline['dirs']['synth'] / 'corpus.json'
        assert run('--out', tmp_path, '--workers', 1, '--annotator', 'remote', 'extract', '--corpus', corpus) == 0
        assert session.calls
        qual = pd.read_csv(tmp_path / 'qual.tsv', sep='\t')
        with open(tmp_path / 'annotation_audit.jsonl', 'r', encoding='utf-8') as f:
            records = [json.loads(line) for line in f if line.strip()]
        assert {r['source'] for r in records} == {'remote'}
        assert qual['P3'].sum() == len(records)

    def test_unreachable_service_falls_back(self, pipeline, tmp_path, monkeypatch):
        monkeypatch.setattr(main, 'SESSION_FACTORY', lambda: FakeSession(requests.ConnectionError('down')))
        corpus = pipeline['dirs']['synth'] / 'corpus.json'
        assert run('--out', tmp_path, '--workers', 1, '--annotator', 'remote', 'extract', '--corpus', corpus) == 0
        fallback = pd.read_csv(pipeline['dirs']['features'] / 'qual.tsv', sep='\t')
        assert pd.read_csv(tmp_path / 'qual.tsv', sep='\t').equals(fallback)
