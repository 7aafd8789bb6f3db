"""
以班级开学日为原点的时间网格（周 / 月）
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core.config import Config
from ..core.errors import GridRangeError
from .attributes import AttributeTable
from .attributes import CohortKey

UNITS = ("week", "month")


def _add_months(day: int, months: int) -> int:
    """某天所在月份偏移 months 个月后的月初（天数）"""
    month = np.datetime64(int(day), "D").astype("datetime64[M]") + months
    return int(month.astype("datetime64[D]").astype(np.int64))


@dataclass(frozen=True)
class TimeGrid:
    """
    班级相对时间网格

    下标 0 为包含开学日的桶。周桶是从开学日起的 7 天窗口；
    月桶是开学月份起偏移的自然月。下标范围为 [lo, hi)。
    """
    cohort: CohortKey
    origin: int
    unit: str = "month"
    lo: int = -12
    hi: int = 60

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"未知的时间单位: {self.unit}")
        if self.lo >= self.hi:
            raise ValueError(f"时间网格范围为空: [{self.lo}, {self.hi})")

    @classmethod
    def for_cohort(cls, attrs: AttributeTable, cohort: CohortKey, unit: str = "month", months_before: Optional[int] = None, months_after: Optional[int] = None) -> "TimeGrid":
        """按配置的默认窗口（开学前12个月到开学后60个月）为班级建立网格"""
        config = Config()
        before = config.grid_months_before if months_before is None else months_before
        after = config.grid_months_after if months_after is None else months_after
        origin = attrs.cohort_start(cohort)
        if unit == "month":
            return cls(cohort, origin, unit, -before, after)
        # 周网格覆盖同样的日历窗口
        first_day = _add_months(origin, -before)
        last_day = _add_months(origin, after) - 1
        lo = (first_day - origin) // 7
        hi = (last_day - origin) // 7 + 1
        return cls(cohort, origin, unit, int(lo), int(hi))

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi)

    def check(self, idx: int) -> None:
        if not self.lo <= idx < self.hi:
            raise GridRangeError(f"时间下标 {idx} 超出网格范围 [{self.lo}, {self.hi})，班级 {self.cohort.label}")

    def bucket_of(self, days: np.ndarray) -> np.ndarray:
        """每个日期所在的桶下标（可能落在网格范围之外）"""
        days = np.asarray(days, dtype=np.int64)
        if self.unit == "week":
            return (days - self.origin) // 7
        months = days.astype("datetime64[D]").astype("datetime64[M]").astype(np.int64)
        origin_month = np.datetime64(int(self.origin), "D").astype("datetime64[M]").astype(np.int64)
        return months - origin_month

    def bucket_start(self, idx: int) -> int:
        if self.unit == "week":
            return self.origin + 7 * idx
        return _add_months(self.origin, idx)

    def bucket_end(self, idx: int) -> int:
        """桶内最后一天（含）"""
        return self.bucket_start(idx + 1) - 1
