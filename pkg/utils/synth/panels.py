"""
回归验证面板 - 直接生成班级级 / 班级-月份级数据并植入已知的协变量效应

不经过网络生成，用于在大样本（例如 7586 个入学班级）上检验回归设计。
"""
from typing import Dict, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.logging import setup_logger
from ..system.seeds import task_rng

logger = setup_logger(logger_name="Synth", log_level="INFO")

PANEL_FLAGS = ("is_private", "is_hbcu", "is_womens", "is_religious", "is_commuter", "placebo")
FLAG_PREVALENCE = {"is_private": 0.4, "is_hbcu": 0.05, "is_womens": 0.05, "is_religious": 0.2, "is_commuter": 0.3, "placebo": 0.5}

PERSISTENCE_EFFECTS = {
    "is_womens": 0.03,
    "is_private": -0.02,
    "is_hbcu": -0.03,
    "is_religious": -0.01,
    "is_commuter": 0.02,
    "greek_rate": -0.05,
    "placebo": 0.0,
}
RUSH_MONTHS = (0, 1, 12, 13)
HOMOPHILY_EFFECTS = {"greek_rate": {m: 0.3 for m in RUSH_MONTHS}}

Effect = Union[float, Mapping[int, float]]


def _school_frame(n_schools: int, rng: np.random.Generator) -> pd.DataFrame:
    frame = pd.DataFrame({"school_id": [f"school-{k + 1:04d}" for k in range(n_schools)]})
    for name in PANEL_FLAGS:
        frame[name] = (rng.random(n_schools) < FLAG_PREVALENCE[name]).astype(int)
    # 女子学校与传统黑人大学不重叠
    frame.loc[frame["is_womens"] == 1, "is_hbcu"] = 0
    frame["greek_rate"] = rng.uniform(0.0, 0.4, size=n_schools)
    frame["grad_rate"] = rng.uniform(0.3, 0.95, size=n_schools)
    return frame


def generate_persistence_panel(n_classes: int = 7586, effects: Optional[Mapping[str, float]] = None, seed: int = 0,
                               entry_years: Sequence[int] = tuple(range(2006, 2013)), school_sd: float = 0.02, noise_sd: float = 0.03) -> pd.DataFrame:
    """
    每个入学班级一行的持续性面板

    share_cff = 0.45 + Σ 效应 × 协变量 + 年份效应 + 学校随机效应 + 噪声

    参数:
        n_classes: 班级数，依次分配到各学校的各入学年份
        effects: 协变量 -> 真实效应，默认 PERSISTENCE_EFFECTS（女子学校 +0.03）
        seed: 随机种子

    返回:
        列 cohort, school_id, entry_year, 各协变量, share_cff, n_ties
    """
    effects = dict(PERSISTENCE_EFFECTS if effects is None else effects)
    rng = task_rng("persistence-panel", root_seed=seed)
    n_years = len(entry_years)
    n_schools = -(-n_classes // n_years)
    schools = _school_frame(n_schools, rng)

    position = np.arange(n_classes)
    frame = schools.iloc[position // n_years].reset_index(drop=True)
    frame.insert(1, "entry_year", np.asarray(entry_years)[position % n_years])
    frame.insert(0, "cohort", frame["school_id"] + ":" + frame["entry_year"].astype(str))

    year_effect = dict(zip(entry_years, np.linspace(0.02, -0.02, n_years)))
    school_effect = rng.normal(0.0, school_sd, size=n_schools)[position // n_years]
    share = 0.45 + frame["entry_year"].map(year_effect).to_numpy() + school_effect + rng.normal(0.0, noise_sd, size=n_classes)
    for name, value in effects.items():
        share = share + value * frame[name].to_numpy(dtype=float)
    frame["share_cff"] = np.clip(share, 0.0, 1.0)
    frame["n_ties"] = rng.integers(200, 2000, size=n_classes)
    logger.info(f"持续性面板: {n_classes} 个班级, {n_schools} 个学校")
    return frame


def _effect_at(effect: Effect, month: int) -> float:
    if isinstance(effect, Mapping):
        return float(effect.get(month, 0.0))
    return float(effect)


def generate_homophily_panel(n_schools: int = 200, months: Sequence[int] = tuple(range(-12, 60)), effects: Optional[Mapping[str, Effect]] = None, seed: int = 0,
                             dimension: str = "gender", school_sd: float = 0.01, noise_sd: float = 0.05) -> pd.DataFrame:
    """
    每个 (班级, 月份) 一行的同质性面板，每个学校一个入学班级

    H = 月份基线 + Σ 效应(月份) × 协变量 + 学校随机效应 + 噪声；
    默认效应为兄弟会比例在招新月份 (0, 1, 12, 13) 的性别同质性尖峰。

    参数:
        effects: 协变量 -> 常数效应或 {月份: 效应}

    返回:
        列 cohort, school_id, entry_year, dimension, mode, idx, H, n_incidences, 各协变量
    """
    effects: Dict[str, Effect] = dict(HOMOPHILY_EFFECTS if effects is None else effects)
    rng = task_rng("homophily-panel", dimension, root_seed=seed)
    schools = _school_frame(n_schools, rng)
    months = list(months)

    frame = schools.loc[schools.index.repeat(len(months))].reset_index(drop=True)
    frame.insert(1, "entry_year", 2011)
    frame.insert(0, "cohort", frame["school_id"] + ":2011")
    frame.insert(3, "dimension", dimension)
    frame.insert(4, "mode", "new")
    frame.insert(5, "idx", np.tile(months, n_schools))

    idx = frame["idx"].to_numpy()
    baseline = 0.1 + 0.05 * np.exp(-np.abs(idx) / 6.0)
    school_effect = np.repeat(rng.normal(0.0, school_sd, size=n_schools), len(months))
    H = baseline + school_effect + rng.normal(0.0, noise_sd, size=len(frame))
    for name, effect in effects.items():
        per_month = np.array([_effect_at(effect, m) for m in idx.tolist()])
        H = H + per_month * frame[name].to_numpy(dtype=float)
    frame.insert(6, "H", H)
    frame.insert(7, "n_incidences", rng.integers(50, 500, size=len(frame)))
    logger.info(f"同质性面板: {n_schools} 个学校 × {len(months)} 个月")
    return frame
