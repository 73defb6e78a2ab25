"""
日志配置
所有模块使用 logging.getLogger(__name__)，这里统一安装行记录格式
"""
import logging
import os
from typing import Optional

LINE_FORMAT = '%(asctime)s level=%(levelname)s logger=%(name)s msg="%(message)s"'


def setup_logging(level: str = 'INFO', log_file: Optional[str] = None) -> logging.Logger:
    """
    安装根日志处理器（重复调用会替换旧处理器）

    Args:
        level: 日志级别
        log_file: 额外写入的日志文件（可选）

    Returns:
        logging.Logger: 根日志器
    """
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LINE_FORMAT)
    stream = logging.StreamHandler()
    stream.setFormatter(formatter)
    root.addHandler(stream)

    if log_file:
        os.makedirs(os.path.dirname(os.path.abspath(log_file)), exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding='utf-8')
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    root.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    return root
