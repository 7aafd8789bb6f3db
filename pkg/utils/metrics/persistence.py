"""
关系持续性 - 大学好友是否仍在 ego 当前亲密度排名的前 K 位（CFF）
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.config import Config
from ..core.logging import setup_logger
from ..graph.attributes import AttributeTable
from ..graph.attributes import SchoolCovariates
from ..graph.closeness import ClosenessTable
from ..graph.temporal import TemporalEdgeList

logger = setup_logger(logger_name="Persistence", log_level="INFO")

GROUPINGS = ("formation_week", "gender_pair", "cohort", "school", "cohort_gender")
PERSISTENCE_COLUMNS = ["grouping", "key", "share_cff", "n_ties"]


@dataclass(frozen=True)
class PersistenceCell:
    grouping: str
    key: str
    share_cff: Optional[float]
    n_ties: int


@dataclass(frozen=True)
class CoverageReport:
    """evaluated: 参与计算的评估数；ego_missing: ego 不在亲密度表中而被排除的评估数"""
    evaluated: int
    ego_missing: int

    def as_dict(self) -> Dict[str, int]:
        return {"evaluated": self.evaluated, "ego_missing": self.ego_missing}


def is_cff(ego: int, alter: int, closeness: ClosenessTable, k: Optional[int] = None) -> Optional[bool]:
    """
    alter 是否在 ego 的前 K 位

    返回:
        ego 不在表中时返回 None；alter 不在 ego 的排名中视为排在 K 之后
    """
    k = Config().cff_top_k if k is None else k
    if k < 1:
        raise ValueError("K 必须不小于1")
    if not closeness.has_ego(ego):
        return None
    rank = closeness.rank_of(ego, alter)
    return rank is not None and rank <= k


def _school_ties(edges: TemporalEdgeList, attrs: AttributeTable):
    """两端属于同一学校的边（大学好友）"""
    same = attrs.school[edges.u] == attrs.school[edges.v]
    return edges.u[same].astype(np.int64), edges.v[same].astype(np.int64), edges.t[same].astype(np.int64)


def evaluate_ties(edges: TemporalEdgeList, attrs: AttributeTable, closeness: ClosenessTable, k: Optional[int] = None, directed: bool = True) -> tuple:
    """
    对每条大学好友关系做 CFF 评估

    directed=True 时每条边从两端各评估一次；否则每条边评估一次，
    任一端把对方排在前 K 位即为 CFF，分组属性取编号较小的一端。

    返回:
        (评估长表, CoverageReport)；长表列为 ego, alter, t, cff
    """
    k = Config().cff_top_k if k is None else k
    if k < 1:
        raise ValueError("K 必须不小于1")
    u, v, t = _school_ties(edges, attrs)
    egos = set(closeness.egos().tolist())

    if directed:
        ego = np.concatenate([u, v])
        alter = np.concatenate([v, u])
        when = np.concatenate([t, t])
        present = np.fromiter((e in egos for e in ego.tolist()), dtype=bool, count=len(ego))
        ranks = closeness.lookup(ego[present], alter[present])
        cff = np.nan_to_num(ranks, nan=np.inf) <= k
        frame = pd.DataFrame({"ego": ego[present], "alter": alter[present], "t": when[present], "cff": cff})
        missing = int((~present).sum())
    else:
        u_present = np.fromiter((e in egos for e in u.tolist()), dtype=bool, count=len(u))
        v_present = np.fromiter((e in egos for e in v.tolist()), dtype=bool, count=len(v))
        present = u_present | v_present
        forward = np.nan_to_num(closeness.lookup(u, v), nan=np.inf) <= k
        backward = np.nan_to_num(closeness.lookup(v, u), nan=np.inf) <= k
        frame = pd.DataFrame({"ego": u[present], "alter": v[present], "t": t[present], "cff": (forward | backward)[present]})
        missing = int((~present).sum())

    coverage = CoverageReport(len(frame), missing)
    if missing:
        logger.warning(f"{missing} 次评估的 ego 不在亲密度表中，已排除")
    return frame, coverage


def _gender_pair(attrs: AttributeTable, ego: np.ndarray, alter: np.ndarray) -> np.ndarray:
    a = attrs.gender_label(attrs.gender[ego])
    b = attrs.gender_label(attrs.gender[alter])
    return np.array(["-".join(sorted((x, y))) for x, y in zip(a, b)], dtype=object)


def _group_keys(grouping: str, frame: pd.DataFrame, attrs: AttributeTable) -> np.ndarray:
    ego = frame["ego"].to_numpy()
    if grouping == "formation_week":
        return ((frame["t"].to_numpy() - attrs.start_date[ego]) // 7).astype(np.int64)
    if grouping == "gender_pair":
        return _gender_pair(attrs, ego, frame["alter"].to_numpy())
    school = np.array(attrs.school_categories, dtype=object)[attrs.school[ego]]
    if grouping == "school":
        return school
    if grouping == "cohort":
        return np.array([f"{s}:{y}" for s, y in zip(school, attrs.entry_year[ego])], dtype=object)
    pair = _gender_pair(attrs, ego, frame["alter"].to_numpy())
    return np.array([f"{y}:{p}" for y, p in zip(attrs.entry_year[ego], pair)], dtype=object)


def share_cff_by(grouping: str, edges: TemporalEdgeList, attrs: AttributeTable, closeness: ClosenessTable, k: Optional[int] = None, directed: bool = True,
                 exclude_recent_years: int = 0) -> List[PersistenceCell]:
    """
    按分组统计 CFF 占比

    参数:
        grouping: formation_week | gender_pair | cohort | school | cohort_gender
        exclude_recent_years: formation_week 分组时排除最近 N 个入学年份的 ego

    返回:
        n_ties > 0 的分组单元，按键排序
    """
    if grouping not in GROUPINGS:
        raise ValueError(f"未知的分组: {grouping}，可选 {GROUPINGS}")
    frame, _ = evaluate_ties(edges, attrs, closeness, k, directed)
    return cells_from_evaluations(grouping, frame, attrs, exclude_recent_years)


def cells_from_evaluations(grouping: str, frame: pd.DataFrame, attrs: AttributeTable, exclude_recent_years: int = 0) -> List[PersistenceCell]:
    if frame.empty:
        return []
    if grouping == "formation_week" and exclude_recent_years > 0:
        recent = np.sort(np.unique(attrs.entry_year))[-exclude_recent_years:]
        frame = frame[~np.isin(attrs.entry_year[frame["ego"].to_numpy()], recent)]
        if frame.empty:
            return []
    keys = _group_keys(grouping, frame, attrs)
    summary = pd.DataFrame({"key": keys, "cff": frame["cff"].to_numpy()}).groupby("key", sort=True)["cff"].agg(["sum", "count"])
    return [PersistenceCell(grouping, str(key), float(row["sum"]) / row["count"], int(row["count"])) for key, row in summary.iterrows()]


def persistence_frame(cells: Sequence[PersistenceCell]) -> pd.DataFrame:
    """grouping,key,share_cff,n_ties"""
    return pd.DataFrame([[c.grouping, c.key, c.share_cff, c.n_ties] for c in cells], columns=PERSISTENCE_COLUMNS)


def weighted_correlation(x: np.ndarray, y: np.ndarray, w: Optional[np.ndarray] = None) -> Optional[Dict[str, float]]:
    """
    加权 Pearson 相关及其 t 统计量 t = r·sqrt((n−2)/(1−r²))

    返回:
        {"rho", "t", "n"}；少于2个点或任一变量方差为0时返回 None
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones(len(x)) if w is None else np.asarray(w, dtype=float)
    n = len(x)
    if n < 2:
        return None
    mx = np.average(x, weights=w)
    my = np.average(y, weights=w)
    vx = np.average((x - mx)**2, weights=w)
    vy = np.average((y - my)**2, weights=w)
    if vx <= 0 or vy <= 0:
        return None
    rho = float(np.clip(np.average((x - mx) * (y - my), weights=w) / np.sqrt(vx * vy), -1.0, 1.0))
    if n == 2 or abs(rho) == 1.0:
        t = float(np.sign(rho) * np.inf) if n > 2 else np.nan
    else:
        t = float(rho * np.sqrt((n - 2) / (1 - rho**2)))
    return {"rho": rho, "t": t, "n": n}


@dataclass(frozen=True, eq=False)
class SchoolScatter:
    points: pd.DataFrame
    correlations: Dict[str, Optional[Dict[str, float]]]


def school_scatter(cohort_year: int, edges: TemporalEdgeList, attrs: AttributeTable, covariates: SchoolCovariates, closeness: ClosenessTable, k: Optional[int] = None) -> SchoolScatter:
    """
    某一入学年份各学校的 (人均大学好友数, CFF 占比) 散点及按人数加权的相关

    相关:
        friends_vs_cff_friends: 人均大学好友数与人均 CFF 大学好友数
        friends_vs_share: 人均大学好友数与 CFF 占比
    """
    columns = ["school_id", "school_type", "members", "mean_college_friends", "mean_cff_friends", "share_cff", "n_ties"]
    frame, _ = evaluate_ties(edges, attrs, closeness, k, directed=True)
    frame = frame[attrs.entry_year[frame["ego"].to_numpy()] == cohort_year]

    u, v, _ = _school_ties(edges, attrs)
    degree = np.bincount(np.concatenate([u, v]), minlength=attrs.node_count)
    rows = []
    ego_school = attrs.school[frame["ego"].to_numpy()]
    for code, school_id in enumerate(attrs.school_categories):
        members = np.flatnonzero((attrs.school == code) & (attrs.entry_year == cohort_year))
        if len(members) == 0:
            continue
        evaluated = frame["cff"].to_numpy()[ego_school == code]
        n_ties = len(evaluated)
        school_type = covariates[school_id].school_type if school_id in covariates else None
        rows.append([
            school_id,
            school_type,
            len(members),
            float(degree[members].mean()),
            float(evaluated.sum()) / len(members),
            float(evaluated.mean()) if n_ties else None,
            n_ties,
        ])
    points = pd.DataFrame(rows, columns=columns)

    usable = points.dropna(subset=["share_cff"])
    correlations: Dict[str, Optional[Dict[str, float]]] = {"friends_vs_cff_friends": None, "friends_vs_share": None}
    if len(usable) >= 2:
        weights = usable["members"].to_numpy()
        correlations["friends_vs_cff_friends"] = weighted_correlation(usable["mean_college_friends"], usable["mean_cff_friends"], weights)
        correlations["friends_vs_share"] = weighted_correlation(usable["mean_college_friends"], usable["share_cff"], weights)
    else:
        logger.info(f"入学年份 {cohort_year} 只有 {len(usable)} 个学校有评估数据，不计算相关")
    return SchoolScatter(points, correlations)
