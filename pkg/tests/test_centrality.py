"""
特征向量中心性、秩相关矩阵与秩变动
"""
import numpy as np
import pytest

from conftest import graph_view
from conftest import random_pairs
from utils.graph.attributes import CohortKey
from utils.graph.snapshot import ScopedEvents
from utils.graph.timegrid import TimeGrid
from utils.metrics.centrality import CentralityVector
from utils.metrics.centrality import eigenvector_centrality
from utils.metrics.centrality import normalized_ranks
from utils.metrics.centrality import position_sample
from utils.metrics.centrality import rank_churn
from utils.metrics.centrality import rank_correlation_matrix
from utils.metrics.centrality import ranks_frame
from utils.metrics.structure import largest_component

COHORT = CohortKey("test", 2011)


def test_three_node_path():
    vector = eigenvector_centrality(graph_view(3, [(0, 1), (1, 2)]))
    assert vector.scores == pytest.approx([0.5, np.sqrt(0.5), 0.5], abs=1e-8)
    assert vector.ranks.tolist() == [0.25, 1.0, 0.25]


def test_no_edges_gives_none():
    assert eigenvector_centrality(graph_view(4, [])) is None


def test_scores_outside_component_are_zero():
    vector = eigenvector_centrality(graph_view(6, [(0, 1), (1, 2), (0, 2), (4, 5)]))
    assert vector.scores[3] == 0.0
    assert vector.scores[4] == 0.0
    assert np.linalg.norm(vector.scores) == pytest.approx(1.0)


def test_matches_dense_eigensolver():
    rng = np.random.default_rng(17)
    view = graph_view(200, random_pairs(rng, 200, 0.05))
    vector = eigenvector_centrality(view)
    lcc = largest_component(view)
    dense = view.adjacency[lcc][:, lcc].toarray()
    _, eigenvectors = np.linalg.eigh(dense)
    principal = np.abs(eigenvectors[:, -1])
    cosine = float(principal @ vector.scores[lcc]) / (np.linalg.norm(principal) * np.linalg.norm(vector.scores[lcc]))
    assert cosine >= 1 - 1e-9


def test_normalized_ranks_average_ties():
    assert normalized_ranks(np.array([0.0, 0.0, 1.0])).tolist() == [0.25, 0.25, 1.0]
    assert normalized_ranks(np.array([3.0])).tolist() == [0.5]


def _vector(idx, ranks):
    ranks = np.asarray(ranks, dtype=float)
    return CentralityVector(idx, np.arange(len(ranks)), ranks, ranks)


def test_churn_of_swapped_ranks():
    grid = TimeGrid(COHORT, 0, "month", 0, 3)
    vectors = {0: _vector(0, [0.0, 0.5, 1.0]), 1: _vector(1, [1.0, 0.5, 0.0]), 2: _vector(2, [1.0, 0.5, 0.0])}
    churn = rank_churn(COHORT, grid, vectors)
    assert churn.value_at(0) is None
    assert churn.value_at(1) == pytest.approx(2 / 3)
    assert churn.value_at(2) == 0.0


def test_correlation_matrix():
    grid = TimeGrid(COHORT, 0, "month", 0, 3)
    vectors = {0: _vector(0, [0.0, 0.5, 1.0]), 1: _vector(1, [1.0, 0.5, 0.0]), 2: None}
    matrix = rank_correlation_matrix(COHORT, grid, vectors)
    assert matrix.value(0, 0) == 1.0
    assert matrix.value(0, 1) == pytest.approx(-1.0)
    assert matrix.value(1, 0) == pytest.approx(-1.0)
    assert matrix.value(0, 2) is None
    assert len(matrix.to_frame()) == 9


def test_ranks_frame_and_position_sample(toy):
    attrs = toy.attributes
    cohort = CohortKey("north", 2011)
    grid = TimeGrid.for_cohort(attrs, cohort)
    scoped = ScopedEvents.build(toy.edges, attrs, grid)
    vectors = {idx: eigenvector_centrality(scoped.view_upto(idx)) for idx in (-3, 0, 45)}
    frame = ranks_frame(cohort, vectors, attrs.node_ids)
    assert set(frame["node"]) == {"n1", "n2", "n3", "n4"}
    assert len(frame) == 3 * 4
    sample = position_sample(vectors, reference_idx=45, compare=(-3, 0), n=200)
    assert len(sample) == 2 * 4
    assert sample["reference_rank"].between(0, 1).all()


def _cohort_vectors(bundle, indices):
    attrs = bundle.attributes
    cohort = attrs.cohorts()[0]
    grid = TimeGrid.for_cohort(attrs, cohort)
    scoped = ScopedEvents.build(bundle.edges, attrs, grid)
    return cohort, grid, {idx: eigenvector_centrality(scoped.view_upto(idx)) for idx in indices}


def test_positions_settle_over_first_year(residential):

    def corr(a, b):
        return float(np.corrcoef(vectors[a].ranks, vectors[b].ranks)[0, 1])

    _, _, vectors = _cohort_vectors(residential, (-3, 0, 9, 45))
    assert corr(9, 45) > corr(0, 45) > corr(-3, 45)


def test_churn_peaks_at_start_of_year(residential):
    cohort, grid, vectors = _cohort_vectors(residential, (10, 11, 12, 13, 14, 22, 23, 24, 25, 26))
    churn = rank_churn(cohort, grid, vectors)
    for year_start in (12, 24):
        assert churn.value_at(year_start) > churn.value_at(year_start - 1)
        assert churn.value_at(year_start) > churn.value_at(year_start + 2)


def test_correlation_matrix_has_settled_block(residential):
    settled, early = (24, 36, 48), (-6, -3, 0)
    cohort, grid, vectors = _cohort_vectors(residential, settled + early)
    matrix = rank_correlation_matrix(cohort, grid, vectors)
    within = [matrix.value(a, b) for a in settled for b in settled if a < b]
    across = [matrix.value(a, b) for a in early for b in settled]
    assert min(within) > 0.8
    assert max(across) < min(within)
    assert np.mean(across) < np.mean(within) - 0.2
    assert matrix.value(1, 24) is None
