"""
结构指标：最大连通分量、聚类系数、模块度（CNM）与平均最短路径
"""
import networkx as nx
import numpy as np
import pandas as pd
import pytest

from conftest import graph_view
from conftest import random_pairs
from utils.graph.attributes import CohortKey
from utils.graph.snapshot import Scope
from utils.graph.snapshot import ScopedEvents
from utils.graph.snapshot import SnapshotChain
from utils.graph.timegrid import TimeGrid
from utils.metrics.modularity import cnm_modularity
from utils.metrics.modularity import modularity
from utils.metrics.structure import avg_clustering
from utils.metrics.structure import avg_shortest_path
from utils.metrics.structure import cross_cohort_path_series
from utils.metrics.structure import lcc_fraction
from utils.metrics.structure import STRUCTURE_COLUMNS
from utils.metrics.structure import structural_snapshot
from utils.metrics.structure import structure_series

TWO_TRIANGLES = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)]


def to_networkx(view):
    graph = nx.Graph()
    graph.add_nodes_from(range(view.node_count))
    u, v = view.edge_arrays()
    graph.add_edges_from(zip(u.tolist(), v.tolist()))
    return graph


def test_two_triangles_modularity():
    view = graph_view(6, TWO_TRIANGLES)
    assert modularity(view, np.array([0, 0, 0, 1, 1, 1])) == pytest.approx(5 / 14)
    q, labels = cnm_modularity(view)
    assert q == pytest.approx(5 / 14)
    assert labels.tolist() == [0, 0, 0, 1, 1, 1]


def test_modularity_without_edges():
    view = graph_view(4, [])
    assert modularity(view, np.zeros(4)) is None
    assert cnm_modularity(view) == (None, None)


def test_modularity_matches_networkx():
    rng = np.random.default_rng(5)
    for _ in range(10):
        view = graph_view(25, random_pairs(rng, 25, 0.15))
        if view.edge_count == 0:
            continue
        labels = rng.integers(0, 4, 25)
        communities = [set(np.flatnonzero(labels == c).tolist()) for c in np.unique(labels)]
        expected = nx.community.modularity(to_networkx(view), communities)
        assert modularity(view, labels) == pytest.approx(expected, abs=1e-12)


def _partitions(n):
    """所有集合划分（受限增长串）"""
    labels = [0] * n

    def extend(pos, top):
        if pos == n:
            yield list(labels)
            return
        for c in range(top + 2):
            labels[pos] = c
            yield from extend(pos + 1, max(top, c))

    labels[0] = 0
    yield from extend(1, 0)


def _best_modularity(view):
    u, v = view.edge_arrays()
    m = len(u)
    degree = view.degrees().astype(float)
    best = -1.0
    for labels in _partitions(view.node_count):
        labels = np.asarray(labels)
        groups = labels.max() + 1
        internal = np.bincount(labels[u][labels[u] == labels[v]], minlength=groups)
        degree_sum = np.bincount(labels, weights=degree, minlength=groups)
        best = max(best, float(np.sum(internal / m) - np.sum((degree_sum / (2.0 * m))**2)))
    return best


@pytest.mark.parametrize(
    "n, pairs",
    [
        (6, TWO_TRIANGLES),
        (8, [(a, b) for a in range(4) for b in range(a + 1, 4)] + [(a, b) for a in range(4, 8) for b in range(a + 1, 8)] + [(3, 4)]),
        (9, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (6, 7), (6, 8), (7, 8), (2, 3), (5, 6), (8, 0)]),
    ],
)
def test_cnm_close_to_exhaustive_optimum(n, pairs):
    view = graph_view(n, pairs)
    q, labels = cnm_modularity(view)
    assert len(labels) == n
    assert q == pytest.approx(modularity(view, labels))
    assert q >= 0.95 * _best_modularity(view)


def test_cnm_agrees_with_networkx_greedy():
    graph = nx.planted_partition_graph(4, 25, 0.5, 0.02, seed=1)
    view = graph_view(100, graph.edges())
    q, labels = cnm_modularity(view)
    expected = nx.community.modularity(graph, nx.community.greedy_modularity_communities(graph))
    assert q == pytest.approx(expected, abs=0.02)
    assert len(np.unique(labels)) == 4


def test_clustering_matches_networkx():
    rng = np.random.default_rng(8)
    for p in (0.05, 0.2, 0.5):
        view = graph_view(40, random_pairs(rng, 40, p))
        assert avg_clustering(view) == pytest.approx(nx.average_clustering(to_networkx(view)), abs=1e-12)


def test_lcc_fraction_counts_isolated_members():
    view = graph_view(6, [(0, 1), (1, 2), (4, 5)])
    assert lcc_fraction(view) == pytest.approx(0.5)
    assert lcc_fraction(view, member_count=12) == pytest.approx(0.25)


def test_path_on_three_node_chain():
    estimate = avg_shortest_path(graph_view(3, [(0, 1), (1, 2)]))
    assert estimate.value == pytest.approx(4 / 3)
    assert not estimate.sampled


def test_path_uses_largest_component():
    view = graph_view(7, [(0, 1), (1, 2), (2, 3), (5, 6)])
    lcc = to_networkx(view).subgraph([0, 1, 2, 3])
    assert avg_shortest_path(view).value == pytest.approx(nx.average_shortest_path_length(lcc))


def test_path_without_edges_is_missing():
    assert avg_shortest_path(graph_view(3, [])).value is None


def test_sampling_falls_back_to_exact_for_small_components():
    view = graph_view(3, [(0, 1), (1, 2)])
    estimate = avg_shortest_path(view, sample_size=10, seed=1)
    assert not estimate.sampled
    assert estimate.value == pytest.approx(4 / 3)


def test_sampled_path_is_reproducible():
    rng = np.random.default_rng(2)
    view = graph_view(300, random_pairs(rng, 300, 0.02))
    first = avg_shortest_path(view, sample_size=50, seed=99)
    second = avg_shortest_path(view, sample_size=50, seed=99)
    assert first.sampled and first.seed == 99
    assert first.value == second.value


@pytest.mark.slow
def test_sampled_path_close_to_exact_on_large_graph():
    rng = np.random.default_rng(4)
    n = 10_000
    u = rng.integers(0, n, 50_000)
    v = rng.integers(0, n, 50_000)
    view = graph_view(n, zip(u.tolist(), v.tolist()))
    exact = avg_shortest_path(view, exact_threshold=n + 1)
    sampled = avg_shortest_path(view, sample_size=256, seed=3)
    assert not exact.sampled and sampled.sampled
    assert sampled.value == pytest.approx(exact.value, rel=0.02)


def test_structural_snapshot_toy(toy):
    grid = TimeGrid.for_cohort(toy.attributes, CohortKey("north", 2011))
    view = ScopedEvents.build(toy.edges, toy.attributes, grid).view_upto(1)
    snap = structural_snapshot(view, member_count=4)
    assert snap.lcc_fraction == 1.0
    # n1,n2,n3 与 n1,n3,n4 两个三角形
    assert snap.avg_clustering == pytest.approx((2 / 3 + 1 + 2 / 3 + 1) / 4)
    assert snap.avg_shortest_path == pytest.approx(14 / 12)


def test_structure_series_shape(toy):
    grid = TimeGrid.for_cohort(toy.attributes, CohortKey("north", 2011))
    frame = structure_series(SnapshotChain.build(toy.edges, toy.attributes, grid))
    assert list(frame.columns) == STRUCTURE_COLUMNS
    assert len(frame) == 72
    assert pd.isna(frame.set_index("idx").loc[-12, "modularity"])


def test_cross_cohort_paths_toy(toy):
    attrs = toy.attributes
    grid = TimeGrid.for_cohort(attrs, CohortKey("north", 2011))
    result = cross_cohort_path_series(toy.edges, attrs, grid, [CohortKey("north", 2011), CohortKey("north", 2012)])
    assert result["north:2012"].value_at(12) == pytest.approx(14 / 8)
    assert result["north:2012"].sample_count[12 - grid.lo] == 8
    assert result["north:2011"].value_at(12) == pytest.approx(14 / 12)
    assert result["north:2012"].value_at(0) is None


def test_cross_cohort_path_to_own_cohort(residential):
    attrs = residential.attributes
    cohort = attrs.cohorts()[0]
    grid = TimeGrid.for_cohort(attrs, cohort)
    result = cross_cohort_path_series(residential.edges, attrs, grid, [cohort], sample_size=10_000)
    view = ScopedEvents.build(residential.edges, attrs, grid, Scope.SCHOOL).view_upto(24)
    lengths = [d for source, targets in nx.all_pairs_shortest_path_length(to_networkx(view)) for target, d in targets.items() if target != source]
    assert result[cohort.label].value_at(24) == pytest.approx(np.mean(lengths), rel=1e-12)
    assert result[cohort.label].sample_count[24 - grid.lo] == len(lengths)
    # 单一入学年份时学校范围即本班级；网络连通时与班级内平均路径一致
    within = avg_shortest_path(ScopedEvents.build(residential.edges, attrs, grid).view_upto(24), exact_threshold=10_000)
    if lcc_fraction(view) == 1.0:
        assert within.value == pytest.approx(result[cohort.label].value_at(24), rel=1e-12)


def test_burst_signature(residential):
    attrs = residential.attributes
    cohort = attrs.cohorts()[0]
    grid = TimeGrid.for_cohort(attrs, cohort)
    scoped = ScopedEvents.build(residential.edges, attrs, grid, Scope.COHORT)
    before = structural_snapshot(scoped.view_upto(-1), member_count=len(scoped.nodes))
    after = structural_snapshot(scoped.view_upto(1), member_count=len(scoped.nodes))
    assert after.lcc_fraction > before.lcc_fraction
    assert after.avg_clustering > before.avg_clustering
    assert after.modularity < before.modularity
    assert after.avg_shortest_path < before.avg_shortest_path


def test_residential_clusters_more_than_commuter(residential, commuter):

    def clustering_at(bundle, idx):
        attrs = bundle.attributes
        cohort = attrs.cohorts()[0]
        grid = TimeGrid.for_cohort(attrs, cohort)
        return avg_clustering(ScopedEvents.build(bundle.edges, attrs, grid).view_upto(idx))

    assert clustering_at(residential, 45) > clustering_at(commuter, 45)
