"""
指标时间序列 - 每个时间桶一个值与样本量，缺失值用 NaN 表示（不是 0）
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..graph.attributes import CohortKey

WEIGHTINGS = ("cohort", "sample")


@dataclass(frozen=True, eq=False)
class MetricSeries:
    cohort: CohortKey
    metric: str
    unit: str
    idx: np.ndarray
    value: np.ndarray
    sample_count: np.ndarray

    def __post_init__(self):
        if len(self.idx) > 1 and np.any(np.diff(self.idx) <= 0):
            raise ValueError(f"{self.metric}: 时间下标必须严格递增")
        if np.any(self.sample_count < 0):
            raise ValueError(f"{self.metric}: 样本量不能为负")
        empty = self.sample_count == 0
        if np.any(~np.isnan(self.value[empty])):
            raise ValueError(f"{self.metric}: 样本量为0时值必须缺失")

    @classmethod
    def build(cls, cohort: CohortKey, metric: str, unit: str, idx: Sequence[int], value: Sequence[float], sample_count: Sequence[int]) -> "MetricSeries":
        value = np.asarray(value, dtype=float).copy()
        sample_count = np.asarray(sample_count, dtype=np.int64)
        value[sample_count == 0] = np.nan
        return cls(cohort, metric, unit, np.asarray(idx, dtype=np.int64), value, sample_count)

    def __len__(self) -> int:
        return len(self.idx)

    def value_at(self, idx: int) -> Optional[float]:
        pos = np.searchsorted(self.idx, idx)
        if pos >= len(self.idx) or self.idx[pos] != idx or np.isnan(self.value[pos]):
            return None
        return float(self.value[pos])

    def to_frame(self) -> pd.DataFrame:
        """cohort,idx,value,sample_count"""
        return pd.DataFrame({
            "cohort": self.cohort.label,
            "idx": self.idx,
            "value": self.value,
            "sample_count": self.sample_count,
        })


def series_frame(series: Iterable[MetricSeries], **extra: str) -> pd.DataFrame:
    """多条序列拼成长表，extra 作为常量列插在 cohort 之后"""
    frames = []
    for item in series:
        frame = item.to_frame()
        for pos, (name, value) in enumerate(extra.items(), start=1):
            frame.insert(pos, name, value)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["cohort", *extra.keys(), "idx", "value", "sample_count"])
    return pd.concat(frames, ignore_index=True)


def aggregate_series(series: List[MetricSeries], weighting: str = "cohort", min_samples: int = 1) -> pd.DataFrame:
    """
    跨班级平均

    参数:
        series: 同一指标、同一时间单位的各班级序列
        weighting: cohort 每个班级权重相同；sample 按样本量加权
        min_samples: 样本量低于该值的 (班级, 时间桶) 不参与平均

    返回:
        idx, mean, std_err, n_cohorts 的长表；没有班级满足阈值的时间桶 mean 为 NaN
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"未知的加权方式: {weighting}，可选 {WEIGHTINGS}")
    columns = ["idx", "mean", "std_err", "n_cohorts"]
    if not series:
        return pd.DataFrame(columns=columns)

    long = pd.concat([pd.DataFrame({"idx": s.idx, "value": s.value, "n": s.sample_count}) for s in series], ignore_index=True)
    all_idx = np.unique(long["idx"].to_numpy())
    long = long[(long["n"] >= min_samples) & long["value"].notna()]
    long = long.assign(w=1.0 if weighting == "cohort" else long["n"].astype(float))

    rows = []
    for idx, group in long.groupby("idx", sort=True):
        values = group["value"].to_numpy()
        weights = group["w"].to_numpy()
        mean = float(np.average(values, weights=weights))
        count = len(values)
        if count > 1:
            variance = float(np.average((values - mean)**2, weights=weights)) * count / (count - 1)
            std_err = float(np.sqrt(variance / count))
        else:
            std_err = np.nan
        rows.append({"idx": int(idx), "mean": mean, "std_err": std_err, "n_cohorts": count})

    result = pd.DataFrame(rows, columns=columns).set_index("idx").reindex(all_idx)
    result["n_cohorts"] = result["n_cohorts"].fillna(0).astype(int)
    return result.rename_axis("idx").reset_index()
