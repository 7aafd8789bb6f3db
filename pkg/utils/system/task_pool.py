"""
任务池管理器 - 按班级 / 学校并行执行分析任务

process 后端用 multiprocessing 进程池绕开 GIL，适合按班级计算的纯 Python 指标；
thread 后端用于任务函数不可序列化（例如闭包）或任务以 numpy 运算为主的场景。
"""
from concurrent.futures import as_completed
from concurrent.futures import ThreadPoolExecutor
import multiprocessing
import threading
import time
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence

from tqdm import tqdm

from ..core.config import Config
from ..core.config import PIPELINE_BACKENDS
from ..core.logging import setup_task_logger

logger = setup_task_logger(logger_name="Pipeline")

# 工作进程内的共享参数，由进程池的 initializer 写入一次
_worker_state: Dict[str, Any] = {}


def _init_process_worker(func: Callable, args: tuple, kwargs: dict, config_values: dict) -> None:
    Config().restore(config_values)
    _worker_state.update(func=func, args=args, kwargs=kwargs)


def _run_in_process(key: Hashable):
    start_time = time.time()
    result = _worker_state["func"](key, *_worker_state["args"], **_worker_state["kwargs"])
    return result, time.time() - start_time


class CohortTaskExecutor:
    """
    并发任务执行器

    任务按调用方给定的键顺序提交，结果也按同一顺序返回，与完成顺序无关；
    任一任务失败时抛出按键顺序的第一个异常。
    max_workers 为 1 时在当前线程内顺序执行，不区分后端。
    """

    def __init__(self, max_workers: Optional[int] = None, name: str = "CohortTask", backend: Optional[str] = None):
        config = Config()
        self.max_workers = max_workers or config.pipeline_workers
        self.backend = backend or config.pipeline_backend
        if self.backend not in PIPELINE_BACKENDS:
            raise ValueError(f"未知的并行后端: {self.backend}，可选 {PIPELINE_BACKENDS}")
        self.name = name
        self._lock = threading.Lock()
        self.stats = {'submitted': 0, 'completed': 0, 'failed': 0}

    def _task_wrapper(self, key: Hashable, func: Callable, *args, **kwargs):
        """任务包装器，用于统计和错误处理"""
        start_time = time.time()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            with self._lock:
                self.stats['failed'] += 1
            logger.error(f"{self.name}任务 {key} 执行失败: {e}")
            raise
        with self._lock:
            self.stats['completed'] += 1
        logger.debug(f"{self.name}任务 {key} 执行完成，耗时: {time.time() - start_time:.3f}秒")
        return result

    def map_ordered(self, func: Callable, keys: Sequence[Hashable], *args, progress: bool = False, **kwargs) -> List[Any]:
        """
        对每个键执行 func(key, *args, **kwargs)

        参数:
            func: 任务函数，第一个参数为键；process 后端要求模块级函数
            keys: 确定性的键顺序（例如自然排序后的班级）
            progress: 是否显示 tqdm 进度条

        返回:
            与 keys 顺序一致的结果列表
        """
        keys = list(keys)
        if not keys:
            return []
        with self._lock:
            self.stats['submitted'] += len(keys)

        if self.max_workers == 1:
            iterator = tqdm(keys, desc=self.name, disable=not progress)
            return [self._task_wrapper(key, func, key, *args, **kwargs) for key in iterator]
        if self.backend == "process":
            return self._map_processes(func, keys, args, kwargs, progress)

        with ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix=self.name) as executor:
            futures = [executor.submit(self._task_wrapper, key, func, key, *args, **kwargs) for key in keys]
            for _ in tqdm(as_completed(futures), total=len(futures), desc=self.name, disable=not progress):
                pass
        first_error = next((f.exception() for f in futures if f.exception() is not None), None)
        if first_error is not None:
            raise first_error
        return [f.result() for f in futures]

    def _map_processes(self, func: Callable, keys: List[Hashable], args: tuple, kwargs: dict, progress: bool) -> List[Any]:
        """共享参数经 initializer 每个进程只传一次，imap 按提交顺序取回结果"""
        processes = min(self.max_workers, len(keys))
        results = []
        with multiprocessing.Pool(processes=processes, initializer=_init_process_worker, initargs=(func, args, kwargs, Config().snapshot())) as pool:
            iterator = pool.imap(_run_in_process, keys)
            for key in tqdm(keys, desc=self.name, disable=not progress):
                try:
                    result, elapsed = next(iterator)
                except Exception as e:
                    self.stats['failed'] += 1
                    logger.error(f"{self.name}任务 {key} 执行失败: {e}")
                    raise
                self.stats['completed'] += 1
                logger.debug(f"{self.name}任务 {key} 执行完成，耗时: {elapsed:.3f}秒")
                results.append(result)
        return results

    def get_pool_stats(self) -> Dict[str, Any]:
        return {"name": self.name, "backend": self.backend, "max_workers": self.max_workers, **self.stats}
