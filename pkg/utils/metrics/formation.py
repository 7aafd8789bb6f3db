"""
关系形成指标 - 新边数量、跨年级好友、度分位数与三元闭包
"""
from dataclasses import dataclass
import math
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.errors import EmptyCohortError
from ..graph.attributes import AttributeTable
from ..graph.snapshot import BucketStep
from ..graph.snapshot import Scope
from ..graph.snapshot import ScopedEvents
from ..graph.snapshot import SnapshotChain
from ..graph.snapshot import SnapshotView
from ..graph.temporal import TemporalEdgeList
from ..graph.timegrid import TimeGrid
from .series import MetricSeries

DEFAULT_PERCENTILES = (25, 50, 75)


@dataclass(frozen=True)
class ClosureStats:
    """没有新边时 share_closing / mean_triangles_closed 缺失（None）"""
    idx: int
    share_closing: Optional[float]
    mean_triangles_closed: Optional[float]
    new_edge_count: int


def _bucket_counts(buckets: np.ndarray, grid: TimeGrid, weights: Optional[np.ndarray] = None) -> np.ndarray:
    inside = (buckets >= grid.lo) & (buckets < grid.hi)
    w = None if weights is None else weights[inside]
    return np.bincount(buckets[inside] - grid.lo, weights=w, minlength=grid.size)


def edge_volume(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, scope: Scope = Scope.COHORT) -> MetricSeries:
    """每个时间桶内新增的作用域内边数，样本量为班级人数"""
    scoped = ScopedEvents.build(edges, attrs, grid, scope)
    return edge_volume_from_events(scoped, len(attrs.cohort_members(grid.cohort)))


def edge_volume_from_events(scoped: ScopedEvents, member_count: int) -> MetricSeries:
    grid = scoped.grid
    counts = _bucket_counts(scoped.bucket, grid)
    return MetricSeries.build(grid.cohort, "edge_volume", grid.unit, grid.indices, counts, np.full(grid.size, member_count))


def cross_cohort_volume(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid) -> Dict[int, MetricSeries]:
    """
    学校范围内涉及本班级成员的新边，按对方的入学年份分组

    两端都是本班级成员的边只计一次，归入本年级；各组之和等于涉及本班级的学校范围新边数。

    返回:
        {对方入学年份: MetricSeries}，包含学校内出现的全部入学年份
    """
    scoped = ScopedEvents.build(edges, attrs, grid, Scope.SCHOOL)
    year = attrs.entry_year[scoped.nodes]
    in_cohort = year == grid.cohort.entry_year
    u_in = in_cohort[scoped.local_u]
    v_in = in_cohort[scoped.local_v]
    involved = u_in | v_in
    # 对方是不在本班级的那一端；两端都在本班级时对方年份即本年级
    counterpart = np.where(u_in, year[scoped.local_v], year[scoped.local_u])

    member_count = int(in_cohort.sum())
    result: Dict[int, MetricSeries] = {}
    for other in sorted(set(year.tolist())):
        mask = involved & (counterpart == other)
        counts = _bucket_counts(scoped.bucket[mask], grid)
        result[int(other)] = MetricSeries.build(grid.cohort, f"cross_cohort_volume_{other}", grid.unit, grid.indices, counts, np.full(grid.size, member_count))
    return result


def nearest_rank(values: np.ndarray, percentile: float) -> float:
    """最近秩百分位数：排序后第 ceil(p/100·n) 个值（至少第1个）"""
    n = len(values)
    if n == 0:
        raise EmptyCohortError("空班级无法计算百分位数")
    rank = max(1, math.ceil(percentile / 100.0 * n))
    return float(np.sort(values)[rank - 1])


def degree_percentiles(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, percentiles: Sequence[float] = DEFAULT_PERCENTILES) -> Dict[float, MetricSeries]:
    """班级内度数在每个时间桶末的百分位数（包括度为0的成员）"""
    scoped = ScopedEvents.build(edges, attrs, grid, Scope.COHORT)
    return degree_percentiles_from_events(scoped, percentiles)


def degree_percentiles_from_events(scoped: ScopedEvents, percentiles: Sequence[float] = DEFAULT_PERCENTILES) -> Dict[float, MetricSeries]:
    grid = scoped.grid
    n = len(scoped.nodes)
    if n == 0:
        raise EmptyCohortError(f"班级 {grid.cohort.label} 没有成员")
    degree = np.zeros(n, dtype=np.int64)
    end = scoped.upto(grid.lo - 1)
    np.add.at(degree, scoped.local_u[:end], 1)
    np.add.at(degree, scoped.local_v[:end], 1)

    values = {p: np.empty(grid.size) for p in percentiles}
    for pos, idx in enumerate(grid.indices):
        start, end = scoped.bucket_range(int(idx))
        np.add.at(degree, scoped.local_u[start:end], 1)
        np.add.at(degree, scoped.local_v[start:end], 1)
        ordered = np.sort(degree)
        for p in percentiles:
            values[p][pos] = ordered[max(1, math.ceil(p / 100.0 * n)) - 1]

    counts = np.full(grid.size, n)
    return {p: MetricSeries.build(grid.cohort, f"degree_p{p:g}", grid.unit, grid.indices, values[p], counts) for p in percentiles}


def common_neighbor_counts(view: SnapshotView, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """每条 (u, v) 在 view 中的共同邻居数 |N(u) ∩ N(v)|"""
    if len(u) == 0:
        return np.zeros(0, dtype=np.int64)
    adjacency = view.adjacency
    shared = adjacency[u].multiply(adjacency[v])
    return np.asarray(shared.sum(axis=1)).ravel().astype(np.int64)


def closure_stats(previous: SnapshotView, new_u: np.ndarray, new_v: np.ndarray, idx: int) -> ClosureStats:
    """
    新边的三元闭包统计

    同一时间桶内的新边彼此不计入共同邻居，只对照上一桶结束时的快照。
    """
    count = len(new_u)
    if count == 0:
        return ClosureStats(idx, None, None, 0)
    triangles = common_neighbor_counts(previous, new_u, new_v)
    return ClosureStats(idx, float(np.mean(triangles >= 1)), float(np.mean(triangles)), count)


def triadic_closure(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, idx: int, scope: Scope = Scope.COHORT) -> ClosureStats:
    grid.check(idx)
    scoped = ScopedEvents.build(edges, attrs, grid, scope)
    start, end = scoped.bucket_range(idx)
    previous = scoped.view_upto(idx - 1)
    return closure_stats(previous, scoped.local_u[start:end], scoped.local_v[start:end], idx)


def closure_from_step(step: BucketStep) -> ClosureStats:
    return closure_stats(step.previous, step.new_u, step.new_v, step.idx)


def triadic_closure_series(chain: SnapshotChain) -> List[ClosureStats]:
    return [closure_from_step(step) for step in chain]


def closure_frame(cohort_label: str, stats: Iterable[ClosureStats], scope: Scope = Scope.COHORT) -> pd.DataFrame:
    rows = [{
        "cohort": cohort_label,
        "scope": Scope(scope).value,
        "idx": s.idx,
        "share_closing": s.share_closing,
        "mean_triangles_closed": s.mean_triangles_closed,
        "new_edge_count": s.new_edge_count,
    } for s in stats]
    return pd.DataFrame(rows, columns=["cohort", "scope", "idx", "share_closing", "mean_triangles_closed", "new_edge_count"])
