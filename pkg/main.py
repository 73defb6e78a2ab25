"""
学业监测流水线主程序
子命令：synth（合成队列）、ingest（读取周报）、extract（特征提取）、
predict（干预推荐）、train（训练模型）、evaluate（方法对比）

退出码：0 成功，1 用法/配置错误，2 数据错误，3 标注器失败（离线标注也失败）
"""
import argparse
import copy
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
import requests
import yaml

import config as defaults
from algorithms import FEATURE_NAMES, PredictorModel, dataset_from_frames, train_model
from domain.codes import INTERVENTION_CODES, QUAL_CODES, QUANT_CODES
from domain.errors import AnnotatorError, InvalidConfig, MonitorError
from features import (AnnotationCache, AnnotatorConfig, JournalBank, QualExtractor, RemoteAnnotator, extract_quant,
                      flags_frame, load_lexicon, load_prompt_template)
from features.qual import write_audit
from ingestion import ingest_file, load_calendar, load_catalog, load_semesters, save_semesters, write_issues
from rules import RuleTable, decide_frames, decisions_frame, load_overlay
from synthcohort import CohortConfig, NoiseConfig, generate_cohort, inject_noise, write_cohort
from utils import (Visualizer, build_manifest, compare_predictors, load_labels, setup_logging, split_students,
                   truth_matrix, write_manifest)

logger = logging.getLogger('main')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ANNOTATOR = 3

SECTIONS = ('paths', 'ingest', 'annotator', 'cart', 'forest', 'mlp', 'cohort', 'noise', 'eval', 'log')
MODEL_METHODS = ('cart', 'forest', 'mlp')

# 远程标注使用的 HTTP 会话工厂（测试时替换为假会话）
SESSION_FACTORY: Callable[[], requests.Session] = requests.Session


@dataclass
class RunConfig:
    """
    一次运行的生效配置：config.py 默认值 <- YAML 配置文件 <- 命令行参数

    Attributes:
        paths: 校历、课程目录、规则表、调整规则、提示词模板、词表、周记短语库路径
        ingest / annotator / cart / forest / mlp / cohort / noise / eval / log: 各模块配置
        seed: 主种子（队列、森林自助采样、MLP、数据划分与置信区间共用）
        workers: 并行数
    """
    paths: Dict[str, str] = field(default_factory=lambda: dict(defaults.PATHS))
    ingest: Dict[str, Any] = field(default_factory=lambda: dict(defaults.INGEST_CONFIG))
    annotator: Dict[str, Any] = field(default_factory=lambda: dict(defaults.ANNOTATOR_CONFIG))
    cart: Dict[str, Any] = field(default_factory=lambda: dict(defaults.CART_CONFIG))
    forest: Dict[str, Any] = field(default_factory=lambda: dict(defaults.FOREST_CONFIG))
    mlp: Dict[str, Any] = field(default_factory=lambda: dict(defaults.MLP_CONFIG))
    cohort: Dict[str, Any] = field(default_factory=lambda: copy.deepcopy(defaults.COHORT_CONFIG))
    noise: Dict[str, Any] = field(default_factory=lambda: dict(defaults.NOISE_CONFIG))
    eval: Dict[str, Any] = field(default_factory=lambda: dict(defaults.EVAL_CONFIG))
    log: Dict[str, Any] = field(default_factory=lambda: dict(defaults.LOG_CONFIG))
    seed: int = defaults.RANDOM_SEED
    workers: int = 1

    @classmethod
    def load(cls, config_path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> 'RunConfig':
        """
        合并默认值、配置文件与命令行覆盖项，并检查引用的文件存在

        Args:
            config_path: YAML 配置文件（可选）
            overrides: 命令行覆盖项，键为 seed / workers / annotator_mode / log_level 或 paths 下的文件标签

        Raises:
            InvalidConfig: 配置文件格式错误、含未知节或引用的文件不存在
        """
        cfg = cls(workers=os.cpu_count() or 1)
        if config_path:
            if not os.path.isfile(config_path):
                raise InvalidConfig(f"配置文件不存在: {config_path}")
            with open(config_path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
            if not isinstance(data, dict):
                raise InvalidConfig(f"配置文件顶层必须是映射: {config_path}")
            unknown = sorted(set(data) - set(SECTIONS) - {'seed', 'workers'})
            if unknown:
                raise InvalidConfig(f"配置文件含未知节: {unknown}")
            for name in SECTIONS:
                section = data.get(name) or {}
                if not isinstance(section, dict):
                    raise InvalidConfig(f"配置节 {name} 必须是映射")
                getattr(cfg, name).update(section)
            if 'seed' in data:
                cfg.seed = int(data['seed'])
            if 'workers' in data:
                cfg.workers = int(data['workers'])

        overrides = overrides or {}
        if overrides.get('seed') is not None:
            cfg.seed = int(overrides['seed'])
        if overrides.get('workers') is not None:
            cfg.workers = int(overrides['workers'])
        if overrides.get('annotator_mode') is not None:
            cfg.annotator['mode'] = overrides['annotator_mode']
        if overrides.get('log_level') is not None:
            cfg.log['level'] = overrides['log_level']
        for label in cfg.paths:
            if overrides.get(label):
                cfg.paths[label] = overrides[label]

        cfg.validate()
        return cfg

    def validate(self):
        if self.workers < 1:
            raise InvalidConfig(f"workers 必须 ≥ 1: {self.workers}")
        if self.annotator.get('mode') not in ('remote', 'fallback'):
            raise InvalidConfig(f"标注方式必须是 remote 或 fallback: {self.annotator.get('mode')}")
        missing = {label: path for label, path in sorted(self.paths.items()) if not os.path.isfile(path)}
        if missing:
            raise InvalidConfig(f"配置引用的文件不存在: {missing}")

    @property
    def annotator_workers(self) -> int:
        if self.annotator['mode'] == 'remote':
            return max(1, min(self.workers, int(self.annotator.get('max_workers', 1))))
        return self.workers

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class CliParser(argparse.ArgumentParser):
    """用法错误以退出码 1 结束"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: 错误: {message}\n")


# ====================================================================== 辅助函数

def _require_file(path: Optional[str], flag: str) -> str:
    if not path or not os.path.isfile(path):
        raise InvalidConfig(f"{flag} 指定的文件不存在: {path}")
    return path


def _read_table(path: str, flag: str) -> pd.DataFrame:
    return pd.read_csv(_require_file(path, flag), sep='\t', dtype={'student_id': str})


def _write_table(frame: pd.DataFrame, path: str):
    frame.to_csv(path, sep='\t', index=False, lineterminator='\n')


def _restrict(frame: pd.DataFrame, students: Optional[Sequence[str]]) -> pd.DataFrame:
    if students is None:
        return frame
    return frame[frame['student_id'].isin(set(students))].reset_index(drop=True)


def _load_split(path: Optional[str]) -> Optional[List[str]]:
    """读取 split.tsv，返回留出学生（未给出时为 None，表示全部学生）"""
    if not path:
        return None
    frame = _read_table(path, '--split')
    return sorted(frame.loc[frame['split'] == 'test', 'student_id'].astype(str))


def _prediction_frame(keys: Sequence, matrix: np.ndarray) -> pd.DataFrame:
    frame = pd.DataFrame(np.asarray(matrix, dtype=int), columns=list(INTERVENTION_CODES))
    frame.insert(0, 'semester_week', [week for _, week in keys])
    frame.insert(0, 'student_id', [student for student, _ in keys])
    return frame


def _rule_matrix(cfg: RunConfig, calendar, quant: pd.DataFrame, qual: pd.DataFrame, keys: Sequence) -> tuple:
    """规则引擎在特征矩阵上的决策，以及按 keys 排列的 (n, 23) 预测矩阵"""
    table = RuleTable.load(cfg.paths['rule_table'])
    overlay = load_overlay(cfg.paths['overlay'])
    decisions = decide_frames(table, calendar, overlay, quant, qual)
    by_key = {(d.student_id, d.semester_week): d.interventions.to_vector() for d in decisions}
    matrix = np.array([by_key[k] for k in keys]).reshape(-1, len(INTERVENTION_CODES))
    return decisions, matrix


def write_error(out_dir: str, command: str, exit_code: int, exc: BaseException):
    """机器可读的错误记录 error.json"""
    payload = {k: v for k, v in vars(exc).items() if not k.startswith('_')}
    record = {'command': command, 'exit_code': exit_code, 'error': type(exc).__name__,
              'message': str(exc), 'details': payload}
    with open(os.path.join(out_dir, 'error.json'), 'w', encoding='utf-8', newline='\n') as f:
        json.dump(record, f, sort_keys=True, indent=1, ensure_ascii=False, default=str)
        f.write('\n')


def _finish(args, cfg: RunConfig, inputs: Mapping[str, Optional[str]], outputs: Sequence[str]):
    manifest = build_manifest(args.command, cfg.to_dict(), cfg.seed,
                              inputs={k: v for k, v in inputs.items() if v}, outputs=outputs)
    path = write_manifest(args.out, manifest)
    print(f"✓ 运行清单已保存: {path}")


def _banner(title: str):
    print("=" * 60)
    print(title)
    print("=" * 60)


# ====================================================================== 子命令

def cmd_synth(args, cfg: RunConfig) -> int:
    """生成合成队列并写成与读取流水线相同的文件"""
    _banner("合成队列")
    calendar = load_calendar(cfg.paths['calendar'])
    catalog = load_catalog(cfg.paths['catalog'])
    if args.students is not None:
        cfg.cohort['student_count'] = args.students
    for key in ('late_posting', 'late_posting_weeks', 'typo', 'skipped_journal'):
        value = getattr(args, key)
        if value is not None:
            cfg.noise[key] = value
    noise = NoiseConfig.from_dict(cfg.noise)
    cohort_config = CohortConfig.from_dict(cfg.cohort, calendar, catalog, noise, cfg.seed)

    cohort = generate_cohort(cohort_config, JournalBank.load(cfg.paths['journal_bank']),
                             RuleTable.load(cfg.paths['rule_table']), load_overlay(cfg.paths['overlay']),
                             n_jobs=cfg.workers, progress=True)
    semesters = inject_noise(cohort.semesters, noise, catalog, cfg.seed)
    paths = write_cohort(cohort, args.out, calendar, catalog, semesters)
    paths['corpus'] = os.path.join(args.out, 'corpus.json')
    save_semesters(paths['corpus'], semesters)

    archetypes = pd.Series([t.archetype for t in cohort.traces], dtype=object).value_counts().sort_index()
    print(f"学生数: {len(cohort)}, 周报数: {cohort.week_count}, 干预标签数: "
          f"{sum(len(r.labeled_interventions) for r in cohort.truth)}")
    for name, count in archetypes.items():
        print(f"  {name:<22}{count:>6}")
    for label, path in sorted(paths.items()):
        print(f"✓ {label} 已保存: {path}")
    _finish(args, cfg, {name: cfg.paths[name] for name in ('calendar', 'catalog', 'journal_bank', 'rule_table',
                                                            'overlay')}, list(paths.values()))
    return EXIT_OK


def cmd_ingest(args, cfg: RunConfig) -> int:
    """读取周报文件，输出整理后的语料与问题报告"""
    _banner("读取周报")
    reports = _require_file(args.reports, '--reports')
    calendar = load_calendar(cfg.paths['calendar'])
    catalog = load_catalog(cfg.paths['catalog'])
    delimiter = args.delimiter if args.delimiter is not None else cfg.ingest['delimiter']
    keep_latest = args.keep_latest or bool(cfg.ingest['keep_latest'])

    result = ingest_file(reports, calendar, catalog, delimiter, keep_latest)
    corpus_path = os.path.join(args.out, 'corpus.json')
    issues_path = os.path.join(args.out, 'issues.tsv')
    save_semesters(corpus_path, result.semesters)
    write_issues(issues_path, result.issues)

    errors = [issue for issue in result.issues if issue.is_error]
    print(f"学生数: {len(result.semesters)}, 问题: {len(result.issues)} (错误 {len(errors)})")
    for issue in result.issues[:20]:
        print(f"  [{issue.severity}] {issue.kind} student={issue.student_id or '-'} "
              f"row={issue.row if issue.row is not None else '-'} week={issue.week if issue.week is not None else '-'}"
              f": {issue.message}")
    print(f"✓ 语料已保存: {corpus_path}")
    print(f"✓ 问题报告已保存: {issues_path}")
    _finish(args, cfg, {'reports': reports, 'calendar': cfg.paths['calendar'], 'catalog': cfg.paths['catalog']},
            [corpus_path, issues_path])
    if errors:
        logger.error("读取存在 %d 个错误，见 %s", len(errors), issues_path)
        record = MonitorError(f"读取存在 {len(errors)} 个错误，见 issues.tsv")
        write_error(args.out, args.command, EXIT_DATA, record)
        return EXIT_DATA
    return EXIT_OK


def cmd_extract(args, cfg: RunConfig) -> int:
    """计算定量与定性特征矩阵"""
    _banner("特征提取")
    corpus = _require_file(args.corpus, '--corpus')
    semesters = load_semesters(corpus)

    quant_path = os.path.join(args.out, 'quant.tsv')
    qual_path = os.path.join(args.out, 'qual.tsv')
    audit_path = os.path.join(args.out, 'annotation_audit.jsonl')
    cache_path = os.path.join(args.out, 'annotation_cache.json')

    quant = [extract_quant(s) for s in semesters]
    _write_table(flags_frame(semesters, quant, QUANT_CODES, missing=True), quant_path)

    lexicon = load_lexicon(cfg.paths['lexicon'])
    template = load_prompt_template(cfg.paths['prompt_template'])
    remote = None
    if cfg.annotator['mode'] == 'remote':
        remote = RemoteAnnotator(AnnotatorConfig.from_dict(cfg.annotator), session=SESSION_FACTORY())
    extractor = QualExtractor(lexicon, template, remote, AnnotationCache(cache_path))
    results = extractor.extract_many(semesters, n_jobs=cfg.annotator_workers, progress=True)
    _write_table(flags_frame(semesters, [r.flags for r in results], QUAL_CODES), qual_path)
    write_audit(audit_path, results)
    extractor.cache.save()

    failures = sum(len(r.failures) for r in results)
    print(f"学生数: {len(semesters)}, 标注方式: {extractor.mode}")
    print(f"缓存命中: {extractor.cache.hits}, 远程失败改用词表: {failures}")
    for path in (quant_path, qual_path, audit_path, cache_path):
        print(f"✓ 已保存: {path}")
    _finish(args, cfg, {'corpus': corpus, 'lexicon': cfg.paths['lexicon'],
                        'prompt_template': cfg.paths['prompt_template']},
            [quant_path, qual_path, audit_path])
    return EXIT_OK


def cmd_predict(args, cfg: RunConfig) -> int:
    """对特征矩阵给出逐周干预推荐"""
    _banner(f"干预推荐 - {args.method.upper()}")
    calendar = load_calendar(cfg.paths['calendar'])
    quant = _read_table(args.quant, '--quant')
    qual = _read_table(args.qual, '--qual')
    dataset = dataset_from_frames(quant, qual, calendar)
    outputs = []
    inputs = {'quant': args.quant, 'qual': args.qual, 'calendar': cfg.paths['calendar']}

    if args.method == 'rule':
        decisions, matrix = _rule_matrix(cfg, calendar, quant, qual, dataset.keys)
        decisions_path = os.path.join(args.out, 'decisions.tsv')
        _write_table(decisions_frame(decisions), decisions_path)
        outputs.append(decisions_path)
        inputs.update(rule_table=cfg.paths['rule_table'], overlay=cfg.paths['overlay'])
    else:
        model = PredictorModel.load(_require_file(args.model, '--model'))
        if model.kind != args.method:
            raise InvalidConfig(f"模型文件类型为 {model.kind}，与 --method {args.method} 不一致")
        matrix = model.predict(dataset.X, FEATURE_NAMES)
        inputs['model'] = args.model

    predictions_path = os.path.join(args.out, 'predictions.tsv')
    _write_table(_prediction_frame(dataset.keys, matrix), predictions_path)
    outputs.append(predictions_path)

    flagged = int(np.any(matrix, axis=1).sum())
    print(f"学生-周: {len(dataset)}, 有干预的学生-周: {flagged}, 干预总数: {int(np.sum(matrix))}")
    for path in outputs:
        print(f"✓ 已保存: {path}")
    _finish(args, cfg, inputs, outputs)
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    """按学生划分数据并训练模型"""
    methods = list(MODEL_METHODS) if args.method == 'all' else [args.method]
    _banner(f"模型训练 - {', '.join(m.upper() for m in methods)}")
    calendar = load_calendar(cfg.paths['calendar'])
    quant = _read_table(args.quant, '--quant')
    qual = _read_table(args.qual, '--qual')
    labels = _read_table(args.labels, '--labels')
    dataset = dataset_from_frames(quant, qual, calendar, labels)

    test_fraction = args.test_fraction if args.test_fraction is not None else float(cfg.eval['test_fraction'])
    train_students, test_students = split_students(dataset.students(), test_fraction, cfg.seed)
    split_path = os.path.join(args.out, 'split.tsv')
    _write_table(pd.DataFrame([(s, 'train') for s in train_students] + [(s, 'test') for s in test_students],
                              columns=['student_id', 'split']), split_path)
    train_set = dataset.select_students(train_students)
    print(f"训练学生: {len(train_students)}, 留出学生: {len(test_students)}, 训练样本: {len(train_set)}")

    seeded = {
        'cart': dict(cfg.cart),
        'forest': dict(cfg.forest, bootstrap_seed=cfg.seed),
        'mlp': dict(cfg.mlp, seed=cfg.seed),
    }
    outputs = [split_path]
    for method in methods:
        model = train_model(method, train_set, seeded[method], n_jobs=cfg.workers, progress=True)
        path = os.path.join(args.out, f'model_{method}.json')
        model.save(path)
        outputs.append(path)
        print(f"✓ {method.upper()} 训练准确率: {100 * model.metadata['train_micro_accuracy']:.2f}%, "
              f"退化目标: {len(model.metadata['degenerate_targets'])}, 已保存: {path}")
        if args.show_rules and method != 'mlp':
            print("-" * 60)
            for code, rules in model.rules().items():
                for text in rules:
                    print(f"  {code}: {text}")
            print("-" * 60)
    _finish(args, cfg, {'quant': args.quant, 'qual': args.qual, 'labels': args.labels,
                        'calendar': cfg.paths['calendar']}, outputs)
    return EXIT_OK


def cmd_evaluate(args, cfg: RunConfig) -> int:
    """规则引擎与各模型在同一批学生-周上的对比"""
    _banner("方法对比")
    calendar = load_calendar(cfg.paths['calendar'])
    students = _load_split(args.split)
    quant = _restrict(_read_table(args.quant, '--quant'), students)
    qual = _restrict(_read_table(args.qual, '--qual'), students)
    dataset = dataset_from_frames(quant, qual, calendar)

    records = load_labels(_require_file(args.labels, '--labels'))
    if students is not None:
        held = set(students)
        records = [r for r in records if r.student_id in held]
    truth = truth_matrix(records, dataset.keys)

    _, rule_matrix = _rule_matrix(cfg, calendar, quant, qual, dataset.keys)
    predictions = {'rule_engine': rule_matrix}
    inputs = {'quant': args.quant, 'qual': args.qual, 'labels': args.labels, 'split': args.split,
              'rule_table': cfg.paths['rule_table'], 'overlay': cfg.paths['overlay']}
    for i, path in enumerate(args.model or []):
        model = PredictorModel.load(_require_file(path, '--model'))
        if model.kind in predictions:
            raise InvalidConfig(f"重复的模型类型: {model.kind}")
        predictions[model.kind] = model.predict(dataset.X, FEATURE_NAMES)
        inputs[f'model_{i}'] = path

    result = compare_predictors(predictions, truth, dataset.keys, level=float(cfg.eval['ci_level']),
                                resamples=int(cfg.eval['resamples']), seed=cfg.seed)
    table_path = os.path.join(args.out, 'comparison.tsv')
    report_path = os.path.join(args.out, 'comparison.json')
    breakdown_path = os.path.join(args.out, 'per_intervention_f1.tsv')
    result.save(table_path, report_path, breakdown_path)

    print(f"学生: {len(dataset.students())}, 学生-周: {len(dataset)}")
    print(result.format())
    outputs = [table_path, report_path, breakdown_path]
    if not args.no_plots:
        visualizer = Visualizer()
        bars_path = os.path.join(args.out, 'comparison_metrics.png')
        heatmap_path = os.path.join(args.out, 'per_intervention_f1.png')
        visualizer.plot_performance_bars(result.table(), save_path=bars_path)
        visualizer.plot_f1_heatmap(result.per_intervention('f1'), save_path=heatmap_path)
        outputs += [bars_path, heatmap_path]
    for path in outputs[:3]:
        print(f"✓ 已保存: {path}")
    _finish(args, cfg, inputs, outputs)
    return EXIT_OK


COMMANDS = {
    'synth': cmd_synth,
    'ingest': cmd_ingest,
    'extract': cmd_extract,
    'predict': cmd_predict,
    'train': cmd_train,
    'evaluate': cmd_evaluate,
}


def build_parser() -> CliParser:
    parser = CliParser(prog='main.py', description='学业监测与干预推荐流水线')
    parser.add_argument('--config', help='YAML 配置文件（覆盖 config.py 默认值）')
    parser.add_argument('--seed', type=int, help='主随机种子')
    parser.add_argument('--workers', type=int, help='并行数（默认为 CPU 核数，远程标注另有上限）')
    parser.add_argument('--annotator', choices=('remote', 'fallback'), help='定性标注方式')
    parser.add_argument('--out', default=defaults.RESULTS_DIR, help='输出目录')
    parser.add_argument('--log-level', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'), help='日志级别')

    shared = CliParser(add_help=False)
    shared.add_argument('--calendar', help='校历文件')
    shared.add_argument('--catalog', help='课程目录文件')

    features = CliParser(add_help=False)
    features.add_argument('--quant', required=True, help='定量特征矩阵 quant.tsv')
    features.add_argument('--qual', required=True, help='定性特征矩阵 qual.tsv')

    sub = parser.add_subparsers(dest='command', required=True)

    synth = sub.add_parser('synth', parents=[shared], help='生成合成队列')
    synth.add_argument('--students', type=int, help='学生数')
    synth.add_argument('--late-posting', dest='late_posting', type=float, help='成绩延迟发布概率')
    synth.add_argument('--late-posting-weeks', dest='late_posting_weeks', type=int, help='延迟周数')
    synth.add_argument('--typo', type=float, help='课程代码笔误概率')
    synth.add_argument('--skipped-journal', dest='skipped_journal', type=float, help='漏写周记概率')

    ingest = sub.add_parser('ingest', parents=[shared], help='读取周报文件')
    ingest.add_argument('--reports', required=True, help='周报文件')
    ingest.add_argument('--keep-latest', action='store_true', help='重复周保留较晚的提交')
    ingest.add_argument('--delimiter', help='分隔符（默认制表符）')

    extract = sub.add_parser('extract', parents=[shared], help='计算特征矩阵')
    extract.add_argument('--corpus', required=True, help='ingest 或 synth 输出的 corpus.json')

    predict = sub.add_parser('predict', parents=[shared, features], help='干预推荐')
    predict.add_argument('--method', choices=('rule',) + MODEL_METHODS, default='rule', help='推荐方法')
    predict.add_argument('--model', help='模型文件（非规则方法必需）')

    train = sub.add_parser('train', parents=[shared, features], help='训练模型')
    train.add_argument('--method', choices=MODEL_METHODS + ('all',), default='all', help='模型类型')
    train.add_argument('--labels', required=True, help='标签矩阵 labels.tsv')
    train.add_argument('--test-fraction', dest='test_fraction', type=float, help='留出学生比例')
    train.add_argument('--show-rules', dest='show_rules', action='store_true', help='打印树模型提取的规则')

    evaluate = sub.add_parser('evaluate', parents=[shared, features], help='方法对比')
    evaluate.add_argument('--labels', required=True, help='标签矩阵 labels.tsv')
    evaluate.add_argument('--model', action='append', help='模型文件（可重复）')
    evaluate.add_argument('--split', help='train 输出的 split.tsv（仅评估留出学生）')
    evaluate.add_argument('--no-plots', dest='no_plots', action='store_true', help='不绘制对比图')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数"""
    args = build_parser().parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    error_path = os.path.join(args.out, 'error.json')
    if os.path.exists(error_path):
        os.remove(error_path)

    try:
        cfg = RunConfig.load(args.config, {
            'seed': args.seed, 'workers': args.workers, 'annotator_mode': args.annotator,
            'log_level': args.log_level, 'calendar': args.calendar, 'catalog': args.catalog,
        })
    except InvalidConfig as exc:
        print(f"✗ 配置错误: {exc}", file=sys.stderr)
        write_error(args.out, args.command, EXIT_USAGE, exc)
        return EXIT_USAGE

    setup_logging(cfg.log['level'], os.path.join(args.out, cfg.log['file_name']))
    logger.info("开始运行 command=%s seed=%d workers=%d out=%s", args.command, cfg.seed, cfg.workers, args.out)
    try:
        code = COMMANDS[args.command](args, cfg)
    except InvalidConfig as exc:
        logger.error("配置错误: %s", exc)
        code = EXIT_USAGE
        write_error(args.out, args.command, code, exc)
    except AnnotatorError as exc:
        logger.error("标注失败: %s", exc)
        code = EXIT_ANNOTATOR
        write_error(args.out, args.command, code, exc)
    except MonitorError as exc:
        logger.error("数据错误 %s: %s", type(exc).__name__, exc)
        code = EXIT_DATA
        write_error(args.out, args.command, code, exc)
    logger.info("运行结束 command=%s exit_code=%d", args.command, code)
    return code


if __name__ == '__main__':
    sys.exit(main())
