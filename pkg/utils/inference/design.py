"""
设计矩阵 - 截距、数值协变量、分类固定效应（去掉参照类别）与交互项
"""
from dataclasses import dataclass
from dataclasses import field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

INTERCEPT = "intercept"


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """
    X 的每一列对应 columns 中的一个名字；terms 记录交互列的 (分类列, 类别, 协变量)，
    clusters 为每行的聚类编码（0..G-1），未指定聚类时为 None
    """
    X: np.ndarray
    columns: List[str]
    clusters: Optional[np.ndarray] = None
    terms: Dict[str, Tuple[str, str, str]] = field(default_factory=dict)

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]


def _levels(values: pd.Series) -> List:
    """类别按取值升序（数值按大小，字符串按字典序）"""
    return sorted(values.dropna().unique().tolist())


def build_design(frame: pd.DataFrame, covariates: Sequence[str] = (), fixed_effects: Sequence[str] = (), interactions: Sequence[Tuple[str, str]] = (),
                 cluster: Optional[str] = None, intercept: bool = True) -> DesignMatrix:
    """
    构造设计矩阵

    参数:
        frame: 观测数据，每行一个观测
        covariates: 数值协变量列
        fixed_effects: 分类列，每个类别一个哑变量，去掉最小的类别作为参照
        interactions: (分类列, 协变量) 对，分类列的每个类别（不去参照）乘以协变量
        cluster: 聚类列（例如 school_id）
        intercept: 是否加截距

    返回:
        DesignMatrix
    """
    blocks: List[np.ndarray] = []
    columns: List[str] = []
    terms: Dict[str, Tuple[str, str, str]] = {}
    n = len(frame)

    if intercept:
        blocks.append(np.ones((n, 1)))
        columns.append(INTERCEPT)
    for name in covariates:
        blocks.append(frame[name].to_numpy(dtype=float).reshape(-1, 1))
        columns.append(name)
    for name in fixed_effects:
        for level in _levels(frame[name])[1:]:
            blocks.append((frame[name] == level).to_numpy(dtype=float).reshape(-1, 1))
            columns.append(f"{name}[{level}]")
    for group, covariate in interactions:
        values = frame[covariate].to_numpy(dtype=float)
        for level in _levels(frame[group]):
            label = f"{group}[{level}]:{covariate}"
            blocks.append(((frame[group] == level).to_numpy(dtype=float) * values).reshape(-1, 1))
            columns.append(label)
            terms[label] = (group, str(level), covariate)

    X = np.hstack(blocks) if blocks else np.zeros((n, 0))
    clusters = None
    if cluster is not None:
        clusters = pd.factorize(frame[cluster], sort=True)[0]
        if np.any(clusters < 0):
            raise ValueError(f"聚类列 {cluster} 存在缺失值")
    return DesignMatrix(X=X, columns=columns, clusters=clusters, terms=terms)
