"""
合成网络生成器

每个学校独立生成（种子由场景种子和学校编号派生），逐个日历月为每个处在
[开学前12个月, 开学后60个月) 窗口内的班级按泊松分布抽取新边数。
每条新边由班级成员按活跃度发起，对象由以下提议混合产生：

- 朋友的朋友（三元闭包）
- 特征匹配（性别 / 专业 / 家乡；入学前优先同乡；招新月份优先同性别）
- 按活跃度加权的均匀选择

超过度数上限或已存在的候选被拒绝后重新提议。
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..core.errors import InfeasibleScenarioError
from ..core.logging import setup_logger
from ..graph.attributes import AttributeTable
from ..graph.attributes import SchoolCovariates
from ..graph.closeness import ClosenessTable
from ..graph.dataset import DatasetBundle
from ..graph.temporal import IngestReport
from ..graph.temporal import TemporalEdgeList
from ..system.seeds import derive_seed
from ..system.task_pool import CohortTaskExecutor
from .closeness import closeness_ranks
from .scenario import MechanismConfig
from .scenario import ScenarioConfig
from .scenario import SchoolSpec

logger = setup_logger(logger_name="Synth", log_level="INFO")

GRID_BEFORE = 12
GRID_AFTER = 60
COLLEGE_MONTHS = 48
_MAX_ATTEMPTS = 8


def _month_of(day: np.datetime64) -> np.datetime64:
    return day.astype("datetime64[M]")


def _day(month: np.datetime64) -> int:
    return int(month.astype("datetime64[D]").astype(np.int64))


@dataclass
class _Population:
    node_ids: List[str]
    cohort: np.ndarray
    gender: np.ndarray
    major: np.ndarray
    hometown: np.ndarray
    activity: np.ndarray

    @property
    def size(self) -> int:
        return len(self.node_ids)

    def frame(self, school_id: str, entry_years: Tuple[int, ...]) -> pd.DataFrame:
        return pd.DataFrame({
            "node_id": self.node_ids,
            "school_id": school_id,
            "entry_year": np.asarray(entry_years)[self.cohort],
            "gender": np.where(self.gender == 0, "F", "M"),
            "major": [f"major-{m:02d}" if m >= 0 else "unknown" for m in self.major.tolist()],
            "hometown": [f"town-{h:02d}" for h in self.hometown.tolist()],
        })


def _populate(spec: SchoolSpec, config: ScenarioConfig, rng: np.random.Generator) -> _Population:
    size = config.size_of(spec)
    n_cohorts = len(config.entry_years)
    n = size * n_cohorts
    node_ids = [f"{spec.school_id}-{year}-{k:04d}" for year in config.entry_years for k in range(size)]
    cohort = np.repeat(np.arange(n_cohorts), size)
    gender = (rng.random(n) >= spec.female_share).astype(np.int64)

    weights = 1.0 / np.arange(1, spec.n_majors + 1)
    major = rng.choice(spec.n_majors, size=n, p=weights / weights.sum())
    major[rng.random(n) < spec.major_unknown_share] = -1

    hometown = rng.integers(1, max(spec.n_hometowns, 2), size=n)
    hometown[rng.random(n) < spec.local_hometown_share] = 0
    activity = rng.lognormal(0.0, spec.mechanisms.activity_sigma, size=n)
    return _Population(node_ids, cohort, gender, major, hometown, activity)


def _check_feasible(spec: SchoolSpec, config: ScenarioConfig) -> float:
    """期望边数不能超过节点对数，也不能超过度数上限允许的边数"""
    mech = spec.mechanisms
    size = config.size_of(spec)
    n = size * len(config.entry_years)
    expected = len(config.entry_years) * size * sum(mech.rate(r) for r in range(-GRID_BEFORE, GRID_AFTER))
    capacity = min(n * (n - 1) / 2.0, mech.max_degree * n / 2.0)
    if expected > capacity:
        raise InfeasibleScenarioError(f"学校 {spec.school_id} 期望生成 {expected:.0f} 条边，超过可容纳的 {capacity:.0f} 条")
    return expected


class _SchoolNetwork:
    """单个学校的生成状态：邻接表（保持插入顺序）与成员集合"""

    def __init__(self, population: _Population, mech: MechanismConfig, greek_rate: float, rng: np.random.Generator):
        self.pop = population
        self.mech = mech
        self.greek_rate = greek_rate
        self.rng = rng
        self.neighbors: List[List[int]] = [[] for _ in range(population.size)]
        self.neighbor_sets: List[set] = [set() for _ in range(population.size)]
        self.u: List[int] = []
        self.v: List[int] = []
        self.t: List[int] = []

    def _pick(self, candidates: np.ndarray) -> Optional[int]:
        if len(candidates) == 0:
            return None
        cumulative = np.cumsum(self.pop.activity[candidates])
        pos = int(np.searchsorted(cumulative, self.rng.random() * cumulative[-1], side="right"))
        return int(candidates[min(pos, len(candidates) - 1)])

    def _matched(self, u: int, pool: np.ndarray, feature: np.ndarray) -> Optional[int]:
        if feature[u] < 0:
            return None
        return self._pick(pool[feature[pool] == feature[u]])

    def _friend_of_friend(self, u: int, in_pool: np.ndarray) -> Optional[int]:
        friends = [w for w in self.neighbors[u] if in_pool[w]]
        if not friends:
            return None
        w = friends[int(self.rng.integers(len(friends)))]
        candidates = [x for x in self.neighbors[w] if in_pool[x] and x != u and x not in self.neighbor_sets[u]]
        if not candidates:
            return None
        return candidates[int(self.rng.integers(len(candidates)))]

    def _propose(self, u: int, pool: np.ndarray, in_pool: np.ndarray, relative: int) -> Optional[int]:
        mech = self.mech
        rng = self.rng
        in_college = 0 <= relative < COLLEGE_MONTHS
        if in_college and relative % 12 in mech.greek_rush_months and rng.random() < mech.greek_rush_strength * self.greek_rate:
            return self._matched(u, pool, self.pop.gender)
        closure = mech.pre_college_closure if relative < 0 else mech.triadic_closure
        if rng.random() < closure:
            candidate = self._friend_of_friend(u, in_pool)
            if candidate is not None:
                return candidate
        if relative < 0 and rng.random() < mech.pre_college_hometown:
            return self._matched(u, pool, self.pop.hometown)
        draw = rng.random()
        for weight, feature in ((mech.gender_weight, self.pop.gender), (mech.major_weight, self.pop.major), (mech.hometown_weight, self.pop.hometown)):
            if draw < weight:
                return self._matched(u, pool, feature)
            draw -= weight
        return self._pick(pool)

    def add_edges(self, initiators: np.ndarray, pools: Tuple[np.ndarray, np.ndarray], relative: int, days: np.ndarray) -> int:
        own_pool, school_pool = pools
        own_mask = np.zeros(self.pop.size, dtype=bool)
        own_mask[own_pool] = True
        school_mask = np.zeros(self.pop.size, dtype=bool)
        school_mask[school_pool] = True
        in_college = 0 <= relative < COLLEGE_MONTHS
        cap = self.mech.max_degree
        added = 0
        for u, day in zip(initiators.tolist(), days.tolist()):
            if len(self.neighbors[u]) >= cap:
                continue
            use_school = in_college and self.rng.random() >= self.mech.same_cohort_share
            pool, in_pool = (school_pool, school_mask) if use_school else (own_pool, own_mask)
            for _ in range(_MAX_ATTEMPTS):
                x = self._propose(u, pool, in_pool, relative)
                if x is None or x == u or x in self.neighbor_sets[u] or len(self.neighbors[x]) >= cap:
                    continue
                self.neighbors[u].append(x)
                self.neighbors[x].append(u)
                self.neighbor_sets[u].add(x)
                self.neighbor_sets[x].add(u)
                self.u.append(u)
                self.v.append(x)
                self.t.append(day)
                added += 1
                break
        return added


def _generate_school(spec: SchoolSpec, config: ScenarioConfig, observe_day: int) -> Dict[str, object]:
    """生成单个学校的属性、边与亲密度排名（节点用学校内下标）"""
    _check_feasible(spec, config)
    rng = np.random.default_rng(derive_seed("school", spec.school_id, root_seed=config.seed))
    pop = _populate(spec, config, rng)
    network = _SchoolNetwork(pop, spec.mechanisms, spec.covariates.greek_rate, rng)

    starts = [_month_of(np.datetime64(config.start_date(y), "D")) for y in config.entry_years]
    first_month = min(starts) - GRID_BEFORE
    last_month = min(max(starts) + GRID_AFTER, _month_of(np.datetime64(observe_day, "D")) + 1)
    members = [np.flatnonzero(pop.cohort == c) for c in range(len(starts))]

    month = first_month
    while month < last_month:
        month_start = _day(month)
        length = _day(month + 1) - month_start
        relatives = [int((month - s).astype(np.int64)) for s in starts]
        enrolled = [c for c, r in enumerate(relatives) if 0 <= r < COLLEGE_MONTHS]
        school_pool = np.concatenate([members[c] for c in enrolled]) if enrolled else np.zeros(0, dtype=np.int64)
        for c, relative in enumerate(relatives):
            if not -GRID_BEFORE <= relative < GRID_AFTER:
                continue
            count = int(rng.poisson(len(members[c]) * spec.mechanisms.rate(relative)))
            if count == 0:
                continue
            weights = pop.activity[members[c]]
            initiators = rng.choice(members[c], size=count, p=weights / weights.sum())
            if relative >= 0 and relative % 12 == 0:
                # 开学月的新边集中在月初
                offsets = np.floor(rng.beta(1.0, 3.0, size=count) * length).astype(np.int64)
            else:
                offsets = rng.integers(0, length, size=count)
            days = np.sort(month_start + offsets)
            keep = days < observe_day
            network.add_edges(initiators[keep], (members[c], school_pool), relative, days[keep])
        month += 1

    u = np.asarray(network.u, dtype=np.int64)
    v = np.asarray(network.v, dtype=np.int64)
    t = np.asarray(network.t, dtype=np.int64)
    ego, alter, rank = closeness_ranks(u, v, t, pop.gender, spec.mechanisms, observe_day, rng)
    logger.info(f"学校 {spec.school_id}: {pop.size} 名成员, {len(u)} 条边")
    return {"population": pop, "u": u, "v": v, "t": t, "ego": ego, "alter": alter, "rank": rank}


def observe_day_of(config: ScenarioConfig) -> int:
    """观测日：未指定时为最后一个班级开学后第60个月的月初"""
    if config.observe_date:
        return int(np.datetime64(config.observe_date, "D").astype(np.int64))
    last = max(_month_of(np.datetime64(config.start_date(y), "D")) for y in config.entry_years)
    return _day(last + GRID_AFTER)


def generate(config: ScenarioConfig, workers: Optional[int] = None) -> DatasetBundle:
    """
    生成完整数据集

    参数:
        config: 场景配置
        workers: 并行学校数，结果与线程数无关

    返回:
        DatasetBundle（边、属性、学校协变量、亲密度排名）
    """
    observe_day = observe_day_of(config)
    executor = CohortTaskExecutor(max_workers=workers, name="Synth", backend="thread")
    specs = {spec.school_id: spec for spec in config.schools}
    parts = executor.map_ordered(lambda school_id: _generate_school(specs[school_id], config, observe_day), list(specs))

    attributes = pd.concat([p["population"].frame(s.school_id, config.entry_years) for p, s in zip(parts, config.schools)], ignore_index=True)
    cohorts = pd.DataFrame([{
        "school_id": s.school_id,
        "entry_year": y,
        "start_date": int(np.datetime64(config.start_date(y), "D").astype(np.int64)),
    } for s in config.schools for y in config.entry_years])
    table = AttributeTable.from_frames(attributes.astype({"entry_year": int}), cohorts)
    index = {node: k for k, node in enumerate(table.node_ids.tolist())}

    def global_ids(part, local):
        names = part["population"].node_ids
        return np.fromiter((index[names[k]] for k in local.tolist()), dtype=np.int64, count=len(local))

    u = np.concatenate([global_ids(p, p["u"]) for p in parts])
    v = np.concatenate([global_ids(p, p["v"]) for p in parts])
    t = np.concatenate([p["t"] for p in parts])
    edges = TemporalEdgeList.from_arrays(u, v, t, id_map=table.node_ids, report=IngestReport(rows=len(u)))
    closeness = ClosenessTable(
        ego=np.concatenate([global_ids(p, p["ego"]) for p in parts]),
        alter=np.concatenate([global_ids(p, p["alter"]) for p in parts]),
        rank=np.concatenate([p["rank"] for p in parts]),
    )
    schools = SchoolCovariates([s.covariates for s in config.schools])
    logger.info(f"场景生成完成: {len(config.schools)} 个学校, {table.node_count} 名成员, {len(edges)} 条边")
    return DatasetBundle(edges=edges, attributes=table, schools=schools, closeness=closeness)
