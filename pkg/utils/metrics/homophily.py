"""
同质性系数 H - 观测到的同特征关联相对于按可得性期望的同特征关联

H = (Σe_ii − Σa_i·b_i) / (1 − Σa_i·b_i)

- e_ii: 两端特征都为 i 的关联（incidence）占比
- a_i: 班级成员一端特征为 i 的关联占比
- b_i: 该时间段作用域内全部合格边中特征 i 的占比；默认 endpoint 规则按端点计数（Σb=1，
  随机混合时 H≈0），either 规则按“任一端为 i”的边计数（Σb 可能大于1）

所有项都由整数计数得到，最终只做一次除法。
"""
from dataclasses import dataclass
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.logging import setup_logger
from ..graph.attributes import AttributeTable
from ..graph.attributes import DIMENSIONS
from ..graph.snapshot import Scope
from ..graph.snapshot import ScopedEvents
from ..graph.temporal import TemporalEdgeList
from ..graph.timegrid import TimeGrid
from .series import MetricSeries

logger = setup_logger(logger_name="Homophily", log_level="INFO")

MODES = ("new", "cumulative")
B_RULES = ("endpoint", "either")
HOMOPHILY_COLUMNS = ["cohort", "dimension", "mode", "idx", "H", "e_sum", "expected", "n_incidences"]


@dataclass(frozen=True)
class HomophilyCoefficient:
    idx: int
    dimension: str
    mode: str
    e_sum: Optional[float]
    expected: Optional[float]
    H: Optional[float]
    n_incidences: int


def _coefficient(same: int, incidences: int, cross: int, denominator: int) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    """
    由整数计数求 (e_sum, expected, H)

    same = Σ_i 同特征关联数，cross = Σ_i A_i·B_i，denominator 为 b 的分母；
    H = (same·D − cross) / (n·D − cross)
    """
    if incidences == 0 or denominator == 0:
        return None, None, None
    scale = incidences * denominator
    e_sum = same / incidences
    expected = cross / scale
    if cross == scale:
        return e_sum, expected, None
    return e_sum, expected, (same * denominator - cross) / (scale - cross)


def homophily_from_incidences(incidences: Sequence[Tuple[Hashable, Hashable]], b: Mapping[Hashable, float]) -> Optional[float]:
    """
    对给定的 (成员特征, 对方特征) 关联列表与 b_i 份额直接套用公式

    参数:
        incidences: 关联列表
        b: 每个特征的 b_i，未出现的特征视为 0

    返回:
        H；没有关联或期望值为1时返回 None
    """
    n = len(incidences)
    if n == 0:
        return None
    same = sum(1 for i, j in incidences if i == j)
    a: Dict[Hashable, int] = {}
    for i, _ in incidences:
        a[i] = a.get(i, 0) + 1
    expected = sum(count / n * b.get(i, 0.0) for i, count in a.items())
    if expected >= 1.0:
        return None
    return (same / n - expected) / (1.0 - expected)


@dataclass(frozen=True, eq=False)
class HomophilyCounts:
    """
    每个时间桶的整数计数（新边模式）与网格开始前的基数（累计模式使用）

    行对应网格下标 lo..hi-1，第0行之前的事件合计在 base_* 中。
    """
    grid: TimeGrid
    dimension: str
    b_rule: str
    incidences: np.ndarray
    same: np.ndarray
    member_by_feature: np.ndarray
    endpoint_by_feature: np.ndarray
    edges: np.ndarray
    base: Tuple[int, int, np.ndarray, np.ndarray, int]

    def _terms(self, incidences, same, a, b, edges) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        cross = np.sum(a * b, axis=-1)
        denominator = 2 * edges if self.b_rule == "endpoint" else edges
        return incidences, same, cross, denominator

    def terms(self, mode: str):
        if mode == "new":
            return self._terms(self.incidences, self.same, self.member_by_feature, self.endpoint_by_feature, self.edges)
        base_inc, base_same, base_a, base_b, base_edges = self.base
        return self._terms(
            base_inc + np.cumsum(self.incidences),
            base_same + np.cumsum(self.same),
            base_a + np.cumsum(self.member_by_feature, axis=0),
            base_b + np.cumsum(self.endpoint_by_feature, axis=0),
            base_edges + np.cumsum(self.edges),
        )

    def coefficients(self, mode: str) -> List[HomophilyCoefficient]:
        if mode not in MODES:
            raise ValueError(f"未知的模式: {mode}，可选 {MODES}")
        incidences, same, cross, denominator = self.terms(mode)
        result = []
        for pos, idx in enumerate(self.grid.indices):
            e_sum, expected, h = _coefficient(int(same[pos]), int(incidences[pos]), int(cross[pos]), int(denominator[pos]))
            result.append(HomophilyCoefficient(int(idx), self.dimension, mode, e_sum, expected, h, int(incidences[pos])))
        return result


def _feature_codes(attrs: AttributeTable, dimension: str, nodes: np.ndarray) -> Tuple[np.ndarray, int]:
    """作用域节点的特征编码（0..K-1，未知为 -1）与类别数"""
    raw = attrs.feature_codes(dimension)[nodes]
    if dimension == "entry_year":
        categories, codes = np.unique(raw, return_inverse=True)
        return codes.astype(np.int64), len(categories)
    return raw.astype(np.int64), len(attrs.feature_labels(dimension))


def homophily_counts(scoped: ScopedEvents, attrs: AttributeTable, dimension: str, b_rule: str = "endpoint") -> HomophilyCounts:
    """
    统计每个时间桶的同质性计数

    - 两端特征都已知的边才合格
    - b 的总体是作用域内全部合格边；endpoint 规则按端点计数（Σb=1），either 规则按“任一端为 i”的边计数
    - 每条边对每个班级成员端点产生一个关联，班级内部的边产生两个
    """
    if dimension not in DIMENSIONS:
        raise ValueError(f"未知的属性维度: {dimension}")
    if b_rule not in B_RULES:
        raise ValueError(f"未知的 b 规则: {b_rule}，可选 {B_RULES}")
    grid = scoped.grid
    codes, k = _feature_codes(attrs, dimension, scoped.nodes)
    k = max(k, 1)
    is_member = (attrs.school[scoped.nodes] == attrs.school_code(grid.cohort.school_id)) & (attrs.entry_year[scoped.nodes] == grid.cohort.entry_year)

    fu = codes[scoped.local_u]
    fv = codes[scoped.local_v]
    eligible = (fu >= 0) & (fv >= 0)
    fu, fv = fu[eligible], fv[eligible]
    mu = is_member[scoped.local_u][eligible]
    mv = is_member[scoped.local_v][eligible]
    bucket = scoped.bucket[eligible]

    before = bucket < grid.lo
    inside = (bucket >= grid.lo) & (bucket < grid.hi)
    row = bucket - grid.lo
    size = grid.size

    def per_bucket(mask, weights=None):
        w = None if weights is None else weights[mask & inside]
        counts = np.bincount(row[mask & inside], weights=w, minlength=size)
        base = int(mask[before].sum() if weights is None else weights[mask & before].sum())
        return counts.astype(np.int64), base

    def per_feature(mask, feature):
        table = np.zeros((size, k), dtype=np.int64)
        np.add.at(table, (row[mask & inside], feature[mask & inside]), 1)
        base = np.bincount(feature[mask & before], minlength=k).astype(np.int64)
        return table, base

    everything = np.ones(len(fu), dtype=bool)
    incidences, base_inc = per_bucket(everything, mu.astype(np.int64) + mv.astype(np.int64))
    same_weight = (mu.astype(np.int64) + mv.astype(np.int64)) * (fu == fv)
    same, base_same = per_bucket(everything, same_weight)
    a_u, base_a_u = per_feature(mu, fu)
    a_v, base_a_v = per_feature(mv, fv)
    if b_rule == "endpoint":
        b_u, base_b_u = per_feature(everything, fu)
        b_v, base_b_v = per_feature(everything, fv)
        b_table, base_b = b_u + b_v, base_b_u + base_b_v
    else:
        b_u, base_b_u = per_feature(everything, fu)
        b_v, base_b_v = per_feature(fu != fv, fv)
        b_table, base_b = b_u + b_v, base_b_u + base_b_v
    edges, base_edges = per_bucket(everything)

    return HomophilyCounts(
        grid=grid,
        dimension=dimension,
        b_rule=b_rule,
        incidences=incidences,
        same=same,
        member_by_feature=a_u + a_v,
        endpoint_by_feature=b_table,
        edges=edges,
        base=(base_inc, base_same, base_a_u + base_a_v, base_b, base_edges),
    )


def homophily_coefficient(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, dimension: str, idx: int, mode: str = "new", scope: Scope = Scope.SCHOOL,
                          b_rule: str = "endpoint") -> HomophilyCoefficient:
    grid.check(idx)
    scoped = ScopedEvents.build(edges, attrs, grid, scope)
    return homophily_counts(scoped, attrs, dimension, b_rule).coefficients(mode)[idx - grid.lo]


def homophily_series(edges: TemporalEdgeList, attrs: AttributeTable, grid: TimeGrid, dimension: str, mode: str = "new", scope: Scope = Scope.SCHOOL,
                     b_rule: str = "endpoint") -> MetricSeries:
    """每个时间桶的 H，样本量为合格关联数"""
    scoped = ScopedEvents.build(edges, attrs, grid, scope)
    return coefficients_to_series(grid, homophily_counts(scoped, attrs, dimension, b_rule).coefficients(mode))


def coefficients_to_series(grid: TimeGrid, coefficients: List[HomophilyCoefficient]) -> MetricSeries:
    first = coefficients[0]
    values = [np.nan if c.H is None else c.H for c in coefficients]
    # 期望值为1时 H 缺失，样本量也记为0以保持“缺失即无样本”
    counts = [c.n_incidences if c.H is not None else 0 for c in coefficients]
    return MetricSeries.build(grid.cohort, f"homophily_{first.dimension}_{first.mode}", grid.unit, grid.indices, values, counts)


def homophily_table(scoped: ScopedEvents, attrs: AttributeTable, dimensions: Sequence[str] = DIMENSIONS, modes: Sequence[str] = MODES, b_rule: str = "endpoint") -> pd.DataFrame:
    """cohort,dimension,mode,idx,H,e_sum,expected,n_incidences"""
    rows = []
    for dimension in dimensions:
        counts = homophily_counts(scoped, attrs, dimension, b_rule)
        for mode in modes:
            for c in counts.coefficients(mode):
                rows.append([scoped.cohort.label, dimension, mode, c.idx, c.H, c.e_sum, c.expected, c.n_incidences])
    logger.debug(f"班级 {scoped.cohort.label} 的同质性计算完成: {len(dimensions)} 个维度")
    return pd.DataFrame(rows, columns=HOMOPHILY_COLUMNS)
