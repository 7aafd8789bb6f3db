"""
快照视图 - 给定时间桶结束时（班级内 / 学校内）已存在的全部边
"""
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Tuple

import numpy as np
from scipy import sparse

from ..core.logging import setup_logger
from .attributes import AttributeTable
from .attributes import CohortKey
from .attributes import member_index
from .temporal import TemporalEdgeList
from .timegrid import TimeGrid

logger = setup_logger(logger_name="Snapshot", log_level="INFO")


class Scope(str, Enum):
    COHORT = "cohort"
    SCHOOL = "school"


def scope_members(attrs: AttributeTable, cohort: CohortKey, scope: Scope) -> np.ndarray:
    """作用域内的节点（全局 NodeId，升序）"""
    if Scope(scope) is Scope.COHORT:
        return attrs.cohort_members(cohort)
    return np.flatnonzero(attrs.school_mask(cohort.school_id))


def _symmetric(n: int, u: np.ndarray, v: np.ndarray) -> sparse.csr_matrix:
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    matrix = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    matrix.sort_indices()
    return matrix


@dataclass(frozen=True, eq=False)
class SnapshotView:
    """
    不可变的邻接视图

    nodes 是作用域内全部成员（全局 NodeId，升序），adjacency 的行列下标与 nodes 一一对应，
    每行的邻居下标升序排列。孤立成员同样在视图内。
    """
    cohort: CohortKey
    scope: Scope
    idx: int
    nodes: np.ndarray
    adjacency: sparse.csr_matrix
    edge_count: int

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def neighbors(self, local: int) -> np.ndarray:
        start, end = self.adjacency.indptr[local], self.adjacency.indptr[local + 1]
        return self.adjacency.indices[start:end]

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """上三角边 (u < v) 的局部下标"""
        upper = sparse.triu(self.adjacency, k=1).tocoo()
        return upper.row.astype(np.int64), upper.col.astype(np.int64)


@dataclass(frozen=True, eq=False)
class ScopedEvents:
    """
    某个班级在某个作用域内的事件，已换算为局部下标并标注所在时间桶

    events 按时间排序，因此 bucket 单调不减，每个桶对应一段连续区间。
    """
    cohort: CohortKey
    scope: Scope
    grid: TimeGrid
    nodes: np.ndarray
    local_u: np.ndarray
    local_v: np.ndarray
    t: np.ndarray
    bucket: np.ndarray
    event_index: np.ndarray

    @classmethod
    def build(cls, edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, scope: Scope = Scope.COHORT) -> "ScopedEvents":
        scope = Scope(scope)
        nodes = scope_members(attrs, grid.cohort, scope)
        local = member_index(attrs, nodes)
        lu = local[edges.u]
        lv = local[edges.v]
        keep = np.flatnonzero((lu >= 0) & (lv >= 0))
        t = edges.t[keep].astype(np.int64)
        return cls(
            cohort=grid.cohort,
            scope=scope,
            grid=grid,
            nodes=nodes,
            local_u=lu[keep],
            local_v=lv[keep],
            t=t,
            bucket=grid.bucket_of(t),
            event_index=keep,
        )

    def __len__(self) -> int:
        return len(self.t)

    def upto(self, idx: int) -> int:
        """bucket <= idx 的事件个数"""
        return int(np.searchsorted(self.bucket, idx, side="right"))

    def bucket_range(self, idx: int) -> Tuple[int, int]:
        return int(np.searchsorted(self.bucket, idx, side="left")), self.upto(idx)

    def view_upto(self, idx: int) -> SnapshotView:
        end = self.upto(idx)
        adjacency = _symmetric(len(self.nodes), self.local_u[:end], self.local_v[:end])
        return SnapshotView(self.cohort, self.scope, idx, self.nodes, adjacency, end)


def snapshot(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, idx: int, scope: Scope = Scope.COHORT) -> SnapshotView:
    """
    时间桶 idx 结束时的快照

    包含两端都在作用域内且 t <= 桶末日的全部边（也包括网格窗口开始之前的边）。
    """
    grid.check(idx)
    return ScopedEvents.build(edges, attrs, grid, scope).view_upto(idx)


def new_edges_in(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, idx: int, scope: Scope = Scope.COHORT) -> TemporalEdgeList:
    """时间桶 idx 内新增、两端都在作用域内的边事件"""
    grid.check(idx)
    scoped = ScopedEvents.build(edges, attrs, grid, scope)
    start, end = scoped.bucket_range(idx)
    return edges.select(scoped.event_index[start:end])


@dataclass(frozen=True)
class BucketStep:
    """快照链中的一步：上一桶结束时的视图、本桶新边（局部下标）、本桶结束时的视图"""
    idx: int
    previous: SnapshotView
    new_u: np.ndarray
    new_v: np.ndarray
    new_t: np.ndarray
    view: SnapshotView


class SnapshotChain:
    """
    按时间下标顺序增量构造快照

    idx+1 的邻接矩阵 = idx 的邻接矩阵 + 第 idx+1 桶新边的稀疏增量。
    只保留上一步的视图，迭代时内存与单个快照同阶。
    """

    def __init__(self, scoped: ScopedEvents):
        self.scoped = scoped
        self.grid = scoped.grid

    @classmethod
    def build(cls, edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, scope: Scope = Scope.COHORT) -> "SnapshotChain":
        return cls(ScopedEvents.build(edges, attrs, grid, scope))

    def __iter__(self) -> Iterator[BucketStep]:
        scoped = self.scoped
        n = len(scoped.nodes)
        lo = self.grid.lo
        # 网格开始之前的边构成 lo 桶之前的基础快照
        previous = scoped.view_upto(lo - 1)
        for idx in range(lo, self.grid.hi):
            start, end = scoped.bucket_range(idx)
            new_u = scoped.local_u[start:end]
            new_v = scoped.local_v[start:end]
            if end > start:
                adjacency = previous.adjacency + _symmetric(n, new_u, new_v)
                adjacency.sort_indices()
            else:
                adjacency = previous.adjacency
            view = SnapshotView(scoped.cohort, scoped.scope, idx, scoped.nodes, adjacency, previous.edge_count + (end - start))
            yield BucketStep(idx, previous, new_u, new_v, scoped.t[start:end], view)
            previous = view
        logger.debug(f"班级 {scoped.cohort.label} 的快照链完成，共 {self.grid.size} 个时间桶")
