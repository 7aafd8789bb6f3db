"""
日志配置 - 为分析流水线提供统一的日志记录设置

模块日志写入 app_YYYYMMDD.log，流水线和工作线程写入 <名称>_YYYYMMDD.log；
LOG_LEVEL 不是 INFO 时同时输出到控制台。
"""
import logging
from logging.handlers import TimedRotatingFileHandler
import os
from pathlib import Path
import re

_FORMATTER = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
_TASK_FORMATTER = logging.Formatter('%(asctime)s - %(levelname)s - %(threadName)s - %(message)s')


def _log_dir() -> Path:
    return Path(os.getenv('LOG_DIR', 'log'))


def _retention_days() -> int:
    try:
        return max(int(os.getenv('LOG_RETENTION_DAYS', '14')), 1)
    except ValueError:
        return 14


def _level(log_level: str) -> int:
    return getattr(logging, os.getenv('LOG_LEVEL', log_level).upper(), logging.INFO)


class _DailyRotatingFileHandler(TimedRotatingFileHandler):
    """按自然日切分的处理器，轮换后的文件名为 <前缀>_YYYYMMDD.log"""

    def namer(self, default_name: str) -> str:
        path = Path(default_name)
        base, date_suffix = path.name.rsplit('.', 1)
        stem = Path(base)
        return str(path.with_name(f'{stem.stem}_{date_suffix}{stem.suffix}'))

    def getFilesToDelete(self):
        current = Path(self.baseFilename)
        pattern = re.compile(rf'^{re.escape(current.stem)}_\d{{8}}\.log$')
        rotated = sorted(str(p) for p in current.parent.iterdir() if pattern.match(p.name))
        return rotated[:max(len(rotated) - self.backupCount, 0)]


def _file_handler(log_file: str) -> _DailyRotatingFileHandler:
    log_dir = _log_dir()
    log_dir.mkdir(parents=True, exist_ok=True)
    handler = _DailyRotatingFileHandler(log_dir / log_file, when='midnight', backupCount=_retention_days(), encoding='utf-8', delay=True)
    handler.suffix = '%Y%m%d'
    return handler


def _configure(logger: logging.Logger, log_file: str, formatter: logging.Formatter, level: int) -> logging.Logger:
    logger.setLevel(level)
    if logger.handlers:
        return logger

    handlers = [_file_handler(log_file)]
    if os.getenv('LOG_LEVEL', 'INFO').upper() != 'INFO':
        handlers.append(logging.StreamHandler())
    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    return logger


def setup_logger(logger_name: str = 'CohortNet', log_level: str = 'INFO', log_file: str = 'app.log') -> logging.Logger:
    """配置并返回一个按天轮换的模块日志记录器"""
    return _configure(logging.getLogger(logger_name), log_file, _FORMATTER, _level(log_level))


def setup_task_logger(logger_name: str = 'Pipeline', log_level: str = 'INFO') -> logging.Logger:
    """流水线与工作线程的日志记录器，单独写入 <logger_name>_YYYYMMDD.log，不向上传播"""
    logger = logging.getLogger(logger_name)
    logger.propagate = False
    return _configure(logger, f'{logger_name}.log', _TASK_FORMATTER, _level(log_level))


class CohortLogAdapter(logging.LoggerAdapter):
    """在每条日志前加上班级标签"""

    def process(self, msg, kwargs):
        return f"[{self.extra['cohort']}] {msg}", kwargs


def cohort_logger(logger: logging.Logger, cohort_label: str) -> CohortLogAdapter:
    return CohortLogAdapter(logger, {'cohort': cohort_label})
