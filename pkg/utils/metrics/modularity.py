"""
模块度与 CNM 贪心凝聚社区划分

划分由 igraph 的 community_fastgreedy 完成，模块度按本项目的快照视图重新计算。
"""
from typing import Optional, Tuple

import igraph as ig
import numpy as np

from ..graph.snapshot import SnapshotView


def modularity(view: SnapshotView, labels: np.ndarray) -> Optional[float]:
    """
    划分的模块度 Q = Σ_c [L_c/m − (d_c/2m)²]

    参数:
        view: 快照视图
        labels: 每个局部节点的社区编号

    返回:
        Q；无边时返回 None
    """
    u, v = view.edge_arrays()
    m = len(u)
    if m == 0:
        return None
    labels = np.asarray(labels)
    _, compact = np.unique(labels, return_inverse=True)
    groups = compact.max() + 1
    internal = np.bincount(compact[u][compact[u] == compact[v]], minlength=groups)
    degree_sum = np.bincount(compact, weights=view.degrees().astype(float), minlength=groups)
    return float(np.sum(internal / m) - np.sum((degree_sum / (2.0 * m))**2))


def _relabel(owner: np.ndarray) -> np.ndarray:
    """社区编号按首次出现的节点顺序重排为 0..c-1"""
    _, first, inverse = np.unique(owner, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse]


def to_igraph(view: SnapshotView) -> ig.Graph:
    """快照视图转为无向简单 igraph 图，顶点编号即局部下标"""
    u, v = view.edge_arrays()
    return ig.Graph(n=view.node_count, edges=np.column_stack([u, v]).tolist(), directed=False)


def cnm_modularity(view: SnapshotView) -> Tuple[Optional[float], Optional[np.ndarray]]:
    """
    Clauset-Newman-Moore 贪心凝聚

    每个节点初始自成一个社区，每步合并 ΔQ 最大的一对相邻社区；
    在合并树上取模块度最大的一层作为划分。

    返回:
        (Q, 每个局部节点的社区编号，按首次出现顺序编号)；无边时返回 (None, None)
    """
    if view.edge_count == 0:
        return None, None
    dendrogram = to_igraph(view).community_fastgreedy()
    labels = _relabel(np.asarray(dendrogram.as_clustering().membership))
    return modularity(view, labels), labels
