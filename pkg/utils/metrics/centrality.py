"""
特征向量中心性及其随时间的稳定性（秩相关矩阵、秩变动）
"""
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.stats import rankdata

from ..core.config import Config
from ..core.logging import setup_logger
from ..graph.attributes import CohortKey
from ..graph.snapshot import SnapshotChain
from ..graph.snapshot import SnapshotView
from ..graph.timegrid import TimeGrid
from .series import MetricSeries
from .structure import largest_component

logger = setup_logger(logger_name="Centrality", log_level="INFO")

MIN_COMMON_MEMBERS = 3


@dataclass(frozen=True, eq=False)
class CentralityVector:
    """
    scores 在最大连通分量上做 L2 归一化，分量外的成员得分为 0；
    ranks 为平均秩归一化到 [0,1]：(r − 1)/(n − 1)
    """
    idx: int
    nodes: np.ndarray
    scores: np.ndarray
    ranks: np.ndarray


def normalized_ranks(scores: np.ndarray) -> np.ndarray:
    n = len(scores)
    if n < 2:
        return np.full(n, 0.5)
    return (rankdata(scores, method="average") - 1.0) / (n - 1.0)


def _power_iteration(matrix: sparse.csr_matrix, tol: float, max_iter: int) -> np.ndarray:
    n = matrix.shape[0]
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        y = matrix @ x
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) <= tol:
            return y
        x = y
    logger.debug(f"幂迭代在 {max_iter} 次内未收敛（n={n}）")
    return x


def eigenvector_centrality(view: SnapshotView, tol: Optional[float] = None, max_iter: Optional[int] = None) -> Optional[CentralityVector]:
    """
    最大连通分量上的特征向量中心性

    对 A + I 做幂迭代（特征向量与 A 相同，二分图上同样收敛），
    初始向量为均匀正向量，相对误差小于 tol 或达到 max_iter 次时停止。

    返回:
        CentralityVector；无边时返回 None
    """
    if view.edge_count == 0:
        return None
    config = Config()
    tol = config.power_iter_tol if tol is None else tol
    max_iter = config.power_iter_max if max_iter is None else max_iter

    lcc = largest_component(view)
    graph = view.adjacency[lcc][:, lcc].tocsr()
    principal = _power_iteration(graph + sparse.identity(len(lcc), format="csr"), tol, max_iter)
    scores = np.zeros(view.node_count)
    scores[lcc] = np.abs(principal)
    return CentralityVector(view.idx, view.nodes, scores, normalized_ranks(scores))


def centrality_series(chain: SnapshotChain) -> Dict[int, Optional[CentralityVector]]:
    return {step.idx: eigenvector_centrality(step.view) for step in chain}


def _common_ranks(a: CentralityVector, b: CentralityVector):
    common, ia, ib = np.intersect1d(a.nodes, b.nodes, assume_unique=True, return_indices=True)
    return common, a.ranks[ia], b.ranks[ib]


def _pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    if len(x) < MIN_COMMON_MEMBERS or np.std(x) == 0 or np.std(y) == 0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


@dataclass(frozen=True, eq=False)
class RankCorrelation:
    cohort: CohortKey
    idx: np.ndarray
    matrix: np.ndarray

    def value(self, idx_a: int, idx_b: int) -> Optional[float]:
        a = int(np.searchsorted(self.idx, idx_a))
        b = int(np.searchsorted(self.idx, idx_b))
        cell = self.matrix[a, b]
        return None if np.isnan(cell) else float(cell)

    def to_frame(self) -> pd.DataFrame:
        """cohort,idx_a,idx_b,corr"""
        a, b = np.meshgrid(self.idx, self.idx, indexing="ij")
        return pd.DataFrame({"cohort": self.cohort.label, "idx_a": a.ravel(), "idx_b": b.ravel(), "corr": self.matrix.ravel()})


def rank_correlation_matrix(cohort: CohortKey, grid: TimeGrid, vectors: Mapping[int, Optional[CentralityVector]]) -> RankCorrelation:
    """
    任意两个月份之间秩向量的 Pearson 相关

    只比较两个快照共有的成员，共同成员少于3个或某一侧缺失时为 NaN。
    """
    idx = grid.indices
    matrix = np.full((len(idx), len(idx)), np.nan)
    for a, idx_a in enumerate(idx):
        va = vectors.get(int(idx_a))
        if va is None:
            continue
        for b in range(a, len(idx)):
            vb = vectors.get(int(idx[b]))
            if vb is None:
                continue
            _, ra, rb = _common_ranks(va, vb)
            corr = _pearson(ra, rb)
            if corr is not None:
                corr = 1.0 if a == b else corr
                matrix[a, b] = matrix[b, a] = corr
    return RankCorrelation(cohort, idx, matrix)


def rank_churn(cohort: CohortKey, grid: TimeGrid, vectors: Mapping[int, Optional[CentralityVector]]) -> MetricSeries:
    """相邻月份之间成员归一化秩的平均绝对变化，任一侧缺失时该月缺失"""
    values = np.full(grid.size, np.nan)
    counts = np.zeros(grid.size, dtype=np.int64)
    for pos, idx in enumerate(grid.indices):
        current = vectors.get(int(idx))
        previous = vectors.get(int(idx) - 1)
        if current is None or previous is None:
            continue
        common, now, before = _common_ranks(current, previous)
        if len(common) == 0:
            continue
        values[pos] = float(np.mean(np.abs(now - before)))
        counts[pos] = len(common)
    return MetricSeries.build(cohort, "rank_churn", grid.unit, grid.indices, values, counts)


def ranks_frame(cohort: CohortKey, vectors: Mapping[int, Optional[CentralityVector]], id_map: Sequence) -> pd.DataFrame:
    """cohort,idx,node,rank"""
    id_map = np.asarray(id_map, dtype=object)
    frames = [pd.DataFrame({"cohort": cohort.label, "idx": idx, "node": id_map[v.nodes], "rank": v.ranks}) for idx, v in sorted(vectors.items()) if v is not None]
    if not frames:
        return pd.DataFrame(columns=["cohort", "idx", "node", "rank"])
    return pd.concat(frames, ignore_index=True)


def position_sample(vectors: Mapping[int, Optional[CentralityVector]], reference_idx: int = 45, compare: Sequence[int] = (-3, 0, 3, 9), n: int = 200,
                    seed: int = 0) -> pd.DataFrame:
    """
    均匀抽样 n 个成员，列出其在 compare 各月与参照月的秩

    返回:
        node, idx, rank, reference_rank 长表；参照月缺失时为空表
    """
    columns = ["node", "idx", "rank", "reference_rank"]
    reference = vectors.get(reference_idx)
    if reference is None:
        return pd.DataFrame(columns=columns)
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(reference.nodes), size=min(n, len(reference.nodes)), replace=False))
    rows = []
    for idx in compare:
        vector = vectors.get(idx)
        if vector is None:
            continue
        _, ia, ib = np.intersect1d(vector.nodes, reference.nodes[picked], assume_unique=True, return_indices=True)
        for k_vec, k_ref in zip(ia.tolist(), ib.tolist()):
            rows.append([int(vector.nodes[k_vec]), idx, float(vector.ranks[k_vec]), float(reference.ranks[picked[k_ref]])])
    return pd.DataFrame(rows, columns=columns)
