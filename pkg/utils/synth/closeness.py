"""
合成亲密度排名

每个 ego 的好友得分 = exp(-关系年龄(年) / τ) + 同性别加分 + 噪声；
另按泊松分布补充校外好友（关系年龄在 0..12 年均匀分布，性别随机），
全部好友按得分降序排名，只输出校内好友的行。
"""
from typing import Tuple

import numpy as np

from .scenario import MechanismConfig

DAYS_PER_YEAR = 365.25
OUTSIDE_MAX_YEARS = 12.0


def closeness_ranks(u: np.ndarray, v: np.ndarray, t: np.ndarray, gender: np.ndarray, mech: MechanismConfig, observe_day: int,
                    rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    参数:
        u, v, t: 学校内的边（节点为学校内下标，t 为天数）
        gender: 学校内节点的性别编码
        observe_day: 观测日，关系年龄以此为准

    返回:
        (ego, alter, rank) 三个等长数组，rank 在同一 ego 内唯一且从 1 开始
    """
    n = len(gender)
    ego = np.concatenate([u, v])
    alter = np.concatenate([v, u])
    age = np.maximum(observe_day - np.concatenate([t, t]), 0) / DAYS_PER_YEAR
    order = np.lexsort((alter, ego))
    ego, alter, age = ego[order], alter[order], age[order]
    bounds = np.searchsorted(ego, np.arange(n + 1))

    egos, alters, ranks = [], [], []
    for node in range(n):
        lo, hi = bounds[node], bounds[node + 1]
        if lo == hi:
            continue
        friends = alter[lo:hi]
        same = (gender[friends] == gender[node]) & (gender[node] >= 0)
        college = np.exp(-age[lo:hi] / mech.closeness_tau_years) + mech.closeness_gender_bonus * same + mech.closeness_noise * rng.standard_normal(hi - lo)

        n_outside = int(rng.poisson(mech.outside_friends))
        outside_age = rng.uniform(0.0, OUTSIDE_MAX_YEARS, size=n_outside)
        outside = (np.exp(-outside_age / mech.closeness_tau_years) + mech.closeness_gender_bonus * (rng.random(n_outside) < 0.5) +
                   mech.closeness_noise * rng.standard_normal(n_outside))

        scores = np.concatenate([college, outside])
        position = np.empty(len(scores), dtype=np.int64)
        position[np.argsort(-scores, kind="stable")] = np.arange(1, len(scores) + 1)
        egos.append(np.full(hi - lo, node, dtype=np.int64))
        alters.append(friends)
        ranks.append(position[:hi - lo])

    if not egos:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    return np.concatenate(egos), np.concatenate(alters).astype(np.int64), np.concatenate(ranks)
