"""
异常定义
学业监测流水线中所有可预期错误的统一层级
"""
from typing import List, Optional, Sequence


class MonitorError(Exception):
    """所有流水线错误的基类"""


class UnknownCode(MonitorError, ValueError):
    """不在规范编码表中的特征/干预编码"""

    def __init__(self, code: str):
        super().__init__(f"未知编码: {code!r}")
        self.code = code


class InvalidConfig(MonitorError, ValueError):
    """配置文件或参数不合法"""


class CalendarError(InvalidConfig):
    """校历锚点或周映射不满足约束"""


class ParseError(MonitorError):
    """周报文件中的单行格式错误"""

    def __init__(self, row: Optional[int], reason: str):
        super().__init__(f"第 {row} 行: {reason}" if row is not None else reason)
        self.row = row
        self.reason = reason


class UnmappedWeek(MonitorError):
    def __init__(self, report_week: int):
        super().__init__(f"报告周 {report_week} 既不在周映射中也不是假期周")
        self.report_week = report_week


class DuplicateWeek(MonitorError):
    def __init__(self, student_id: str, semester_week: int):
        super().__init__(f"学生 {student_id} 在学期第 {semester_week} 周有多份周报")
        self.student_id = student_id
        self.semester_week = semester_week


class CycleDetected(MonitorError):
    """规则表的继承关系存在环"""

    def __init__(self, cycle: Sequence[str]):
        super().__init__("规则继承存在环: " + " -> ".join(cycle))
        self.cycle = list(cycle)


class LengthMismatch(MonitorError):
    pass


class AnnotatorError(MonitorError):
    """定性标注器错误的基类"""


class TransportError(AnnotatorError):
    pass


class MalformedAnnotation(AnnotatorError):
    def __init__(self, raw_response: str, reason: str = ""):
        super().__init__(f"标注结果格式错误: {reason}")
        self.raw_response = raw_response
        self.reason = reason


class EmptyDataset(MonitorError):
    pass


class NonFiniteLoss(MonitorError):
    def __init__(self, epoch: int, batch: int, loss: float):
        super().__init__(f"损失不是有限值: epoch={epoch} batch={batch} loss={loss}")
        self.epoch = epoch
        self.batch = batch
        self.loss = loss


class FeatureMapMismatch(MonitorError):
    pass


class KeyMismatch(MonitorError):
    def __init__(self, missing: List, extra: List):
        super().__init__(f"预测与真值的 (学生, 周) 键不一致: 缺少 {len(missing)} 个, 多出 {len(extra)} 个")
        self.missing = list(missing)
        self.extra = list(extra)


class InsufficientUnits(MonitorError):
    pass
