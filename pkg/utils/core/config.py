"""
配置管理模块
包含分析流水线的全局配置信息的管理
"""

import os
from pathlib import Path

from .logging import setup_logger

logger = setup_logger(logger_name="Config", log_level="INFO")

PIPELINE_BACKENDS = ("process", "thread")


class Config:
    """配置类，用于管理所有配置信息（单例模式）"""

    _instance = None
    _initialized = False

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(Config, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        if self._initialized:
            return

        # 加载环境变量配置
        from dotenv import load_dotenv

        load_dotenv()

        # 输出目录
        output_dir_str = os.getenv("OUTPUT_DIR") or "output"
        self.output_dir = Path(output_dir_str)

        # 并发与随机种子
        self.pipeline_workers = self._get_env_int("PIPELINE_WORKERS", 4)
        self.pipeline_backend = self._get_env_choice("PIPELINE_BACKEND", "process", PIPELINE_BACKENDS)
        self.root_seed = self._get_env_int("ROOT_SEED", 20240917, minimum=0)

        # 时间网格：开学前12个月到开学后60个月
        self.grid_months_before = self._get_env_int("GRID_MONTHS_BEFORE", 12, minimum=0)
        self.grid_months_after = self._get_env_int("GRID_MONTHS_AFTER", 60)

        # 各指标的阈值
        self.cff_top_k = self._get_env_int("CFF_TOP_K", 200)
        self.path_exact_threshold = self._get_env_int("PATH_EXACT_THRESHOLD", 2000)
        self.path_sample_sources = self._get_env_int("PATH_SAMPLE_SOURCES", 256)
        self.homophily_min_incidences = self._get_env_int("HOMOPHILY_MIN_INCIDENCES", 20, minimum=0)

        # 幂迭代参数
        self.power_iter_tol = self._get_env_float("POWER_ITER_TOL", 1e-10)
        self.power_iter_max = self._get_env_int("POWER_ITER_MAX", 1000)

        self._initialized = True

    @staticmethod
    def _get_env_int(env_name: str, default: int, minimum: int = 1) -> int:
        """安全地从环境变量获取整数值"""
        try:
            value = int(os.getenv(env_name, str(default)))
            if value < minimum:
                raise ValueError(f"{env_name}必须不小于{minimum}")
            return value
        except (ValueError, TypeError) as e:
            logger.warning(f"{env_name}配置无效: {e}，使用默认值{default}")
            return default

    @staticmethod
    def _get_env_float(env_name: str, default: float) -> float:
        """安全地从环境变量获取正浮点数"""
        try:
            value = float(os.getenv(env_name, str(default)))
            if value <= 0:
                raise ValueError(f"{env_name}必须大于0")
            return value
        except (ValueError, TypeError) as e:
            logger.warning(f"{env_name}配置无效: {e}，使用默认值{default}")
            return default

    @staticmethod
    def _get_env_choice(env_name: str, default: str, choices: tuple) -> str:
        value = os.getenv(env_name, default).strip().lower()
        if value not in choices:
            logger.warning(f"{env_name}配置无效: {value}，可选 {choices}，使用默认值{default}")
            return default
        return value

    def snapshot(self) -> dict:
        """当前配置项（含命令行覆盖），用于传给工作进程"""
        return {name: value for name, value in vars(self).items() if not name.startswith("_")}

    def restore(self, values: dict) -> None:
        """在工作进程中恢复主进程的配置"""
        for name, value in values.items():
            setattr(self, name, value)
