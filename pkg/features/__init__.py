"""
特征提取模块
定量特征（成绩、缺交）与定性特征（周记标注）
"""
from .annotators import (AnnotationResult, AnnotatorConfig, Lexicon, RemoteAnnotator, annotate_fallback,
                         annotate_remote, load_lexicon, parse_annotation)
from .journal_bank import JournalBank, LabeledJournal
from .prompt import PromptTemplate, build_prompt, load_prompt_template
from .qual import AnnotationCache, ExtractionResult, QualExtractor, extract_qual, promote_consecutive_illness
from .quant import MISSING_COLUMN, extract_quant, flags_frame, frame_to_flags, frame_to_missing

__all__ = [
    'AnnotationResult', 'AnnotatorConfig', 'Lexicon', 'RemoteAnnotator', 'annotate_fallback',
    'annotate_remote', 'load_lexicon', 'parse_annotation',
    'JournalBank', 'LabeledJournal',
    'PromptTemplate', 'build_prompt', 'load_prompt_template',
    'AnnotationCache', 'ExtractionResult', 'QualExtractor', 'extract_qual', 'promote_consecutive_illness',
    'MISSING_COLUMN', 'extract_quant', 'flags_frame', 'frame_to_flags', 'frame_to_missing',
]
