"""
定性特征提取
逐周调用标注器（远程或离线），远程失败的周退回离线标注，最后做连续患病后处理
"""
import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from joblib import Parallel, delayed
from tqdm import tqdm

from domain.codes import QualFeatures
from domain.errors import AnnotatorError
from domain.records import StudentSemester, WeeklyReport
from .annotators import AnnotationResult, Lexicon, RemoteAnnotator, annotate_fallback
from .prompt import PromptTemplate, build_prompt, journal_section, prompt_hash

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeekFailure:
    """远程标注失败、已退回离线标注的一周"""
    student_id: str
    semester_week: int
    error: str


@dataclass
class ExtractionResult:
    """
    一名学生的定性特征提取结果

    Attributes:
        student_id: 学生编号
        flags: 逐周定性特征（已做连续患病后处理）
        failures: 远程失败的周
        audit: 每个已交周一条审计记录
    """
    student_id: str
    flags: List[QualFeatures] = field(default_factory=list)
    failures: List[WeekFailure] = field(default_factory=list)
    audit: List[Dict[str, Any]] = field(default_factory=list)


def journal_hash(report: WeeklyReport) -> str:
    return hashlib.sha256(journal_section(report).encode('utf-8')).hexdigest()[:16]


class AnnotationCache:
    """
    标注缓存：(学生, 周, 周记哈希, 标注方式) -> 标注结果

    读写都在锁内进行，可被多个线程共享。
    """

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._lock = threading.Lock()
        self._entries: Dict[str, Dict[str, Any]] = {}
        self.hits = 0
        if path and os.path.exists(path):
            with open(path, 'r', encoding='utf-8') as f:
                self._entries = json.load(f)
            logger.info("已加载标注缓存 path=%s entries=%d", path, len(self._entries))

    @staticmethod
    def key(student_id: str, week: int, digest: str, mode: str) -> str:
        return f"{student_id}|{week}|{digest}|{mode}"

    def get(self, key: str) -> Optional[AnnotationResult]:
        with self._lock:
            item = self._entries.get(key)
            if item is None:
                return None
            self.hits += 1
        return AnnotationResult(QualFeatures.from_codes(item['flags']), dict(item['rationales']),
                                item['raw_response'], item['source'])

    def put(self, key: str, result: AnnotationResult):
        item = {'flags': result.flags.codes(), 'rationales': dict(result.rationales),
                'raw_response': result.raw_response, 'source': result.source}
        with self._lock:
            self._entries[key] = item

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def save(self, path: Optional[str] = None):
        path = path or self.path
        if not path:
            return
        with self._lock:
            snapshot = dict(self._entries)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(snapshot, f, ensure_ascii=False, sort_keys=True, indent=1)


def promote_consecutive_illness(weekly: Sequence[QualFeatures]) -> List[QualFeatures]:
    """
    连续患病后处理

    标注器给出的患病（H1.1 或 H1.2）若前一周也患病，则本周为 H1.2，否则为 H1.1。
    """
    result = []
    previous_ill = False
    for flags in weekly:
        ill = flags.ill
        if ill:
            flags = flags.with_flags(**{'H1.1': not previous_ill, 'H1.2': previous_ill})
        result.append(flags)
        previous_ill = ill
    return result


class QualExtractor:
    """
    定性特征提取器

    remote 为 None 时为离线模式；否则逐周远程标注，失败的周用词表标注代替。
    """

    def __init__(self, lexicon: Lexicon, template: Optional[PromptTemplate] = None,
                 remote: Optional[RemoteAnnotator] = None, cache: Optional[AnnotationCache] = None):
        if remote is not None and template is None:
            raise ValueError("远程标注需要提示词模板")
        self.lexicon = lexicon
        self.template = template
        self.remote = remote
        self.cache = cache if cache is not None else AnnotationCache()

    @property
    def mode(self) -> str:
        """标注方式标记（参与缓存键）"""
        if self.remote is None:
            return f"fallback:lexicon-v{self.lexicon.version}"
        return f"remote:{self.remote.config.model_name}:t{self.template.version}-{self.template.digest}"

    def annotate_week(self, semester: StudentSemester, report: WeeklyReport, result: ExtractionResult):
        """标注一个已交周，记录失败与审计信息"""
        prompt = build_prompt(self.template, report, semester.calendar, semester.categories) \
            if self.template is not None else journal_section(report)
        key = AnnotationCache.key(semester.student_id, report.semester_week, journal_hash(report), self.mode)
        annotation = self.cache.get(key)
        if annotation is None:
            annotation = self._annotate(semester.student_id, report, prompt, result)
            if annotation.source == ('fallback' if self.remote is None else 'remote'):
                self.cache.put(key, annotation)
        result.audit.append({
            'student_id': semester.student_id,
            'semester_week': report.semester_week,
            'prompt_hash': prompt_hash(prompt),
            'source': annotation.source,
            'flags': annotation.flags.codes(),
            'rationales': dict(annotation.rationales),
            'raw_response': annotation.raw_response,
        })
        return annotation.flags

    def _annotate(self, student_id: str, report: WeeklyReport, prompt: str,
                  result: ExtractionResult) -> AnnotationResult:
        if self.remote is not None:
            try:
                return self.remote.annotate(prompt)
            except AnnotatorError as exc:
                result.failures.append(WeekFailure(student_id, report.semester_week, str(exc)))
                logger.warning("远程标注失败，改用词表 student=%s week=%d error=%s",
                               student_id, report.semester_week, exc)
        try:
            return annotate_fallback(report, self.lexicon)
        except (ValueError, KeyError) as exc:
            raise AnnotatorError(f"学生 {student_id} 第 {report.semester_week} 周离线标注也失败: {exc}") from exc

    def extract(self, semester: StudentSemester) -> ExtractionResult:
        result = ExtractionResult(semester.student_id)
        weekly = []
        for report in semester.reports:
            if report.missing:
                weekly.append(QualFeatures())
            else:
                weekly.append(self.annotate_week(semester, report, result))
        result.flags = promote_consecutive_illness(weekly)
        return result

    def extract_many(self, semesters: Sequence[StudentSemester], n_jobs: int = 1,
                     progress: bool = True) -> List[ExtractionResult]:
        """
        多名学生并行提取（线程后端，共享缓存），结果保持输入顺序
        """
        iterator = tqdm(semesters, desc='定性特征', disable=None if progress else True)
        results = Parallel(n_jobs=n_jobs, prefer='threads')(delayed(self.extract)(s) for s in iterator)
        failures = sum(len(r.failures) for r in results)
        logger.info("定性特征提取完成 students=%d mode=%s cache_hits=%d failures=%d",
                    len(results), self.mode, self.cache.hits, failures)
        return list(results)


def extract_qual(semester: StudentSemester, annotator: QualExtractor) -> List[QualFeatures]:
    """逐周定性特征；缺交周全为假，并满足连续患病规则"""
    return annotator.extract(semester).flags


def write_audit(path: str, results: Sequence[ExtractionResult]):
    """审计日志（JSON Lines，每个已交周一条）"""
    with open(path, 'w', encoding='utf-8') as f:
        for result in results:
            for record in result.audit:
                f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + '\n')
