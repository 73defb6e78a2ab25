"""
全局配置文件
包含数据文件路径、标注器参数、模型超参数、合成队列与评估配置等
"""
import os

# 项目路径
PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(PROJECT_ROOT, 'data')
RESULTS_DIR = os.path.join(PROJECT_ROOT, 'results')

# 随附的数据文件
PATHS = {
    'calendar': os.path.join(DATA_DIR, 'calendar_fall.yaml'),
    'catalog': os.path.join(DATA_DIR, 'catalog_cs.yaml'),
    'rule_table': os.path.join(DATA_DIR, 'rule_table.yaml'),
    'overlay': os.path.join(DATA_DIR, 'conflict_overlay.yaml'),
    'prompt_template': os.path.join(DATA_DIR, 'prompt_template.yaml'),
    'lexicon': os.path.join(DATA_DIR, 'lexicon.yaml'),
    'journal_bank': os.path.join(DATA_DIR, 'journal_bank.yaml'),
}

# 周报读取配置
INGEST_CONFIG = {
    'delimiter': '\t',
    'keep_latest': False,     # 同一学期周出现多份周报时保留较晚提交的一份
}

# 定性标注器配置（兼容本地 Ollama 风格的 /api/generate 接口）
ANNOTATOR_CONFIG = {
    'mode': 'fallback',       # 'remote' 或 'fallback'
    'endpoint_url': 'http://127.0.0.1:11434/api/generate',
    'model_name': 'llama3.1:8b',
    'temperature': 0.1,
    'max_retries': 2,
    'timeout': 120.0,
    'max_workers': 4,
}

# CART 配置
CART_CONFIG = {
    'max_depth': 15,
    'min_samples_split': 15,
    'min_samples_leaf': 5,
    'class_weight': 'balanced',
    'max_rules_per_target': 10,
    'min_samples_for_rule': 10,
}

# 随机森林配置
FOREST_CONFIG = {
    'tree_count': 100,
    'max_depth': 15,
    'min_rule_frequency': 0.1,
    'bootstrap': True,
    'max_features': None,
    'min_samples_split': 2,
    'min_samples_leaf': 1,
    'class_weight': None,
}

# MLP 配置
MLP_CONFIG = {
    'layer_widths': (256, 128, 64),
    'dropout_rate': 0.3,
    'l2_coefficient': 0.001,
    'batch_norm': True,
    'epochs': 100,
    'learning_rate': 0.001,
    'batch_size': 32,
    'optimizer': 'adam',      # 'adam' 或 'sgd'
}

# 合成队列配置
COHORT_CONFIG = {
    'student_count': 227,     # 227 人 x 15 周 ≈ 3400 条周报
    'archetype_mix': {
        'thriving': 0.30,
        'struggling_academic': 0.18,
        'ill': 0.12,
        'overcommitted': 0.14,
        'disengaged': 0.12,
        'transitioning': 0.14,
    },
}

# 合成噪声配置（默认无噪声）
NOISE_CONFIG = {
    'late_posting': 0.0,
    'late_posting_weeks': 1,
    'typo': 0.0,
    'skipped_journal': 0.0,
}

# 评估配置
EVAL_CONFIG = {
    'ci_level': 0.90,
    'resamples': 1000,
    'test_fraction': 0.3,
}

# 日志配置
LOG_CONFIG = {
    'level': 'INFO',
    'file_name': 'run.log',
}

# 随机种子（保证可复现性）
RANDOM_SEED = 42
