"""
结构指标 - 最大连通分量占比、平均聚类系数、模块度、平均最短路径
"""
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse import csgraph

from ..core.config import Config
from ..core.errors import EmptyCohortError
from ..core.logging import setup_logger
from ..graph.attributes import AttributeTable
from ..graph.attributes import CohortKey
from ..graph.snapshot import Scope
from ..graph.snapshot import ScopedEvents
from ..graph.snapshot import SnapshotChain
from ..graph.snapshot import SnapshotView
from ..graph.temporal import TemporalEdgeList
from ..graph.timegrid import TimeGrid
from ..system.seeds import derive_seed
from .modularity import cnm_modularity
from .series import MetricSeries

logger = setup_logger(logger_name="Structure", log_level="INFO")

STRUCTURE_COLUMNS = ["cohort", "idx", "lcc_fraction", "avg_clustering", "modularity", "avg_path", "path_is_sampled", "seed"]

# 全源 BFS 时每批的源点数，限制距离矩阵的内存
_SOURCE_CHUNK = 256


@dataclass(frozen=True)
class PathEstimate:
    value: Optional[float]
    sampled: bool
    sources: int
    seed: Optional[int]


@dataclass(frozen=True, eq=False)
class StructuralSnapshot:
    idx: int
    lcc_fraction: float
    avg_clustering: float
    modularity: Optional[float]
    avg_shortest_path: Optional[float]
    path_is_sampled: bool
    seed: Optional[int]
    partition: Optional[np.ndarray]

    def as_row(self, cohort_label: str) -> list:
        return [cohort_label, self.idx, self.lcc_fraction, self.avg_clustering, self.modularity, self.avg_shortest_path, self.path_is_sampled, self.seed]


def _component_labels(view: SnapshotView) -> np.ndarray:
    _, labels = csgraph.connected_components(view.adjacency, directed=False)
    return labels


def largest_component(view: SnapshotView) -> np.ndarray:
    """最大连通分量的局部下标（升序）；同样大小时取编号最小的分量"""
    if view.node_count == 0:
        return np.zeros(0, dtype=np.int64)
    labels = _component_labels(view)
    return np.flatnonzero(labels == np.argmax(np.bincount(labels)))


def lcc_fraction(view: SnapshotView, member_count: Optional[int] = None) -> float:
    """最大连通分量大小 / 班级人数（孤立成员计入分母）"""
    member_count = view.node_count if member_count is None else member_count
    if member_count <= 0:
        raise EmptyCohortError(f"班级 {view.cohort.label} 没有成员")
    return len(largest_component(view)) / member_count


def avg_clustering(view: SnapshotView) -> float:
    """全部成员局部聚类系数的平均值，度小于2的节点计为0"""
    if view.node_count == 0:
        raise EmptyCohortError(f"班级 {view.cohort.label} 没有成员")
    adjacency = view.adjacency
    degree = view.degrees().astype(float)
    triangles = np.asarray((adjacency @ adjacency).multiply(adjacency).sum(axis=1)).ravel() / 2.0
    wedges = degree * (degree - 1) / 2.0
    local = np.divide(triangles, wedges, out=np.zeros_like(triangles), where=wedges > 0)
    return float(local.mean())


def _distance_sum(graph: sparse.csr_matrix, sources: np.ndarray) -> float:
    total = 0.0
    for start in range(0, len(sources), _SOURCE_CHUNK):
        chunk = sources[start:start + _SOURCE_CHUNK]
        distances = csgraph.shortest_path(graph, method="D", directed=False, unweighted=True, indices=chunk)
        total += float(distances.sum())
    return total


def avg_shortest_path(view: SnapshotView, sample_size: Optional[int] = None, seed: Optional[int] = None, exact_threshold: Optional[int] = None) -> PathEstimate:
    """
    最大连通分量内有序节点对的平均 BFS 距离

    分量不超过 exact_threshold 个节点且未指定 sample_size 时精确计算；
    否则随机抽取 sample_size 个源点（默认配置 PATH_SAMPLE_SOURCES），
    抽样数不小于分量大小时退化为精确计算。

    返回:
        PathEstimate；分量少于2个节点时 value 为 None
    """
    config = Config()
    exact_threshold = config.path_exact_threshold if exact_threshold is None else exact_threshold
    lcc = largest_component(view)
    n = len(lcc)
    if n < 2:
        return PathEstimate(None, False, 0, None)
    graph = view.adjacency[lcc][:, lcc].tocsr()

    if sample_size is None and n <= exact_threshold:
        return PathEstimate(_distance_sum(graph, np.arange(n)) / (n * (n - 1)), False, n, None)

    k = config.path_sample_sources if sample_size is None else sample_size
    if k >= n:
        return PathEstimate(_distance_sum(graph, np.arange(n)) / (n * (n - 1)), False, n, None)
    seed = derive_seed("path", view.cohort.label, view.idx) if seed is None else seed
    sources = np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False))
    return PathEstimate(_distance_sum(graph, sources) / (k * (n - 1)), True, k, seed)


def structural_snapshot(view: SnapshotView, member_count: Optional[int] = None, seed: Optional[int] = None, sample_size: Optional[int] = None,
                        exact_threshold: Optional[int] = None) -> StructuralSnapshot:
    """一个快照的四项结构指标"""
    q, partition = cnm_modularity(view)
    path = avg_shortest_path(view, sample_size=sample_size, seed=seed, exact_threshold=exact_threshold)
    return StructuralSnapshot(
        idx=view.idx,
        lcc_fraction=lcc_fraction(view, member_count),
        avg_clustering=avg_clustering(view),
        modularity=q,
        avg_shortest_path=path.value,
        path_is_sampled=path.sampled,
        seed=path.seed,
        partition=partition,
    )


def structure_series(chain: SnapshotChain, **kwargs) -> pd.DataFrame:
    rows = []
    for step in chain:
        rows.append(structural_snapshot(step.view, **kwargs).as_row(chain.grid.cohort.label))
    return pd.DataFrame(rows, columns=STRUCTURE_COLUMNS)


def _cohort_locals(attrs: AttributeTable, nodes: np.ndarray, cohort: CohortKey) -> np.ndarray:
    """作用域节点中属于 cohort 的局部下标，班级不存在时为空"""
    if cohort.school_id not in attrs.school_categories:
        return np.zeros(0, dtype=np.int64)
    mask = (attrs.school[nodes] == attrs.school_code(cohort.school_id)) & (attrs.entry_year[nodes] == cohort.entry_year)
    return np.flatnonzero(mask)


def pair_distance(distances: np.ndarray, sources: np.ndarray, targets: np.ndarray) -> tuple:
    """由源点距离矩阵求 sources 到 targets 的平均距离（不含自身与不连通的对），返回 (均值, 对数)"""
    if len(sources) == 0 or len(targets) == 0:
        return None, 0
    distances = distances[:, targets]
    distances[sources[:, None] == targets[None, :]] = np.inf
    finite = np.isfinite(distances)
    count = int(finite.sum())
    if count == 0:
        return None, 0
    return float(distances[finite].mean()), count


def cross_cohort_path_series(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, counterparts: Sequence[CohortKey], sample_size: Optional[int] = None,
                             root_seed: Optional[int] = None) -> Dict[str, MetricSeries]:
    """
    本班级成员与其他班级成员之间在学校范围快照中的平均距离

    源点从本班级成员中按派生种子抽样（不超过 sample_size 个，默认配置 PATH_SAMPLE_SOURCES），
    目标为对方班级的全部成员；不连通的对不计入。

    返回:
        {对方班级标签: MetricSeries}，样本量为有效节点对数
    """
    sample_size = Config().path_sample_sources if sample_size is None else sample_size
    scoped = ScopedEvents.build(edges, attrs, grid, Scope.SCHOOL)
    focal = _cohort_locals(attrs, scoped.nodes, grid.cohort)
    if len(focal) > sample_size:
        seed = derive_seed("cross_path", grid.cohort.label, root_seed=root_seed)
        focal = np.sort(np.random.default_rng(seed).choice(focal, size=sample_size, replace=False))
    targets = {c.label: _cohort_locals(attrs, scoped.nodes, c) for c in counterparts}

    values = {label: np.full(grid.size, np.nan) for label in targets}
    counts = {label: np.zeros(grid.size, dtype=np.int64) for label in targets}
    for pos, step in enumerate(SnapshotChain(scoped)):
        if step.view.edge_count == 0:
            continue
        if len(focal) == 0:
            break
        distances = csgraph.shortest_path(step.view.adjacency, method="D", directed=False, unweighted=True, indices=focal)
        for label, target in targets.items():
            mean, count = pair_distance(distances, focal, target)
            if mean is not None:
                values[label][pos] = mean
                counts[label][pos] = count
    logger.debug(f"班级 {grid.cohort.label} 的跨班级路径计算完成: {len(targets)} 个对方班级")
    return {label: MetricSeries.build(grid.cohort, f"cross_path_{label}", grid.unit, grid.indices, values[label], counts[label]) for label in targets}
