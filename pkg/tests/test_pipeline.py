"""
流水线：指标选择、可复现输出、回归与图表数据的上下游依赖
"""
# pylint: disable=redefined-outer-name
from dataclasses import replace
import json

import pandas as pd
import pytest

from utils.core.errors import MissingInputError
from utils.core.errors import MissingPrerequisiteError
from utils.core.errors import UnknownMetricError
from utils.graph.attributes import DIMENSIONS
from utils.graph.attributes import SchoolCovariates
from utils.graph.attributes import SchoolRecord
from utils.inference.models import PERSISTENCE_COVARIATES
from utils.metrics.homophily import HOMOPHILY_COLUMNS
from utils.pipeline.figures import FIGURE_NAMES
from utils.pipeline.figures import run_figures
from utils.pipeline.manifest import MANIFEST_FILE
from utils.pipeline.manifest import RunManifest
from utils.pipeline.regress import run_regressions
from utils.pipeline.regress import SUMMARY_FILE
from utils.pipeline.runner import METRIC_NAMES
from utils.pipeline.runner import OUTPUT_FILES
from utils.pipeline.runner import parse_selection
from utils.pipeline.runner import run_metrics
from utils.synth.panels import generate_homophily_panel
from utils.synth.panels import generate_persistence_panel
from utils.synth.panels import PANEL_FLAGS


@pytest.fixture(scope="module")
def metrics_dir(small_bundle, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("metrics")
    run_metrics(small_bundle, list(METRIC_NAMES), out_dir)
    return out_dir


def _csv_bytes(out_dir):
    return {path.name: path.read_bytes() for path in sorted(out_dir.glob("*.csv"))}


def test_parse_selection():
    assert parse_selection(None) == []
    assert parse_selection("") == []
    assert parse_selection("structure, edge_volume") == ["edge_volume", "structure"]
    with pytest.raises(UnknownMetricError) as info:
        parse_selection("edge_volume,pagerank")
    assert "pagerank" in str(info.value)
    assert "triadic_closure" in str(info.value)


def test_every_output_is_written(metrics_dir):
    written = {path.stem for path in metrics_dir.glob("*.csv")}
    expected = {output for outputs in OUTPUT_FILES.values() for output in outputs}
    assert expected <= written
    manifest = RunManifest.load(metrics_dir)
    assert manifest.metrics == list(METRIC_NAMES)
    assert manifest.cohorts == ["alpha:2011", "alpha:2012", "beta:2011", "beta:2012"]
    assert manifest.parameters["top_k"] == 200


def test_edge_volume_covers_whole_grid(metrics_dir):
    frame = pd.read_csv(metrics_dir / "edge_volume.csv")
    assert frame.groupby("cohort").size().tolist() == [72, 72, 72, 72]
    assert frame["idx"].min() == -12 and frame["idx"].max() == 59


def test_homophily_table_layout(metrics_dir):
    frame = pd.read_csv(metrics_dir / "homophily.csv")
    assert list(frame.columns) == HOMOPHILY_COLUMNS
    assert set(frame["dimension"]) == set(DIMENSIONS)
    assert len(frame) == 4 * len(DIMENSIONS) * 2 * 72


def test_rerun_is_byte_identical(small_bundle, tmp_path):
    run_metrics(small_bundle, ["edge_volume", "triadic_closure", "structure"], tmp_path)
    first = {**_csv_bytes(tmp_path), MANIFEST_FILE: (tmp_path / MANIFEST_FILE).read_bytes()}
    run_metrics(small_bundle, ["edge_volume", "triadic_closure", "structure"], tmp_path)
    second = {**_csv_bytes(tmp_path), MANIFEST_FILE: (tmp_path / MANIFEST_FILE).read_bytes()}
    assert first == second


def test_worker_count_does_not_change_results(small_bundle, tmp_path):
    selection = ["edge_volume", "degree_percentiles", "structure", "centrality"]
    run_metrics(small_bundle, selection, tmp_path / "one", workers=1)
    run_metrics(small_bundle, selection, tmp_path / "three", workers=3)
    assert _csv_bytes(tmp_path / "one") == _csv_bytes(tmp_path / "three")


def test_process_and_thread_backends_match(small_bundle, tmp_path):
    selection = ["triadic_closure", "homophily", "structure", "cross_cohort_path"]
    run_metrics(small_bundle, selection, tmp_path / "thread", workers=2, backend="thread")
    run_metrics(small_bundle, selection, tmp_path / "process", workers=2, backend="process")
    assert _csv_bytes(tmp_path / "thread") == _csv_bytes(tmp_path / "process")


def test_empty_selection_writes_only_manifest(small_bundle, tmp_path):
    manifest = run_metrics(small_bundle, "", tmp_path)
    assert manifest.metrics == []
    assert [path.name for path in tmp_path.iterdir()] == [MANIFEST_FILE]


def test_persistence_needs_closeness(small_bundle, tmp_path):
    with pytest.raises(MissingInputError):
        run_metrics(replace(small_bundle, closeness=None), ["persistence"], tmp_path)


def test_figures_from_metrics(metrics_dir, small_bundle):
    names = [name for name in FIGURE_NAMES if name not in ("homo_all", "persistence_coef")]
    written = run_figures(metrics_dir, names, schools=small_bundle.schools)
    assert list(written) == names
    homophily = pd.read_csv(written["homo_avg"])
    assert set(homophily["dimension"]) == set(DIMENSIONS)
    positions = pd.read_csv(written["position_time"])
    assert positions.groupby(["statistic", "school_type"]).ngroups == 4 * 2
    crossyear = pd.read_csv(written["crossyear"], dtype={"relation": str})
    assert {"+0", "+1", "-1"} <= set(crossyear["relation"])


def test_figures_need_upstream_outputs(small_bundle, tmp_path):
    with pytest.raises(MissingPrerequisiteError):
        run_figures(tmp_path, ["new_edges"], schools=small_bundle.schools)
    run_metrics(small_bundle, ["edge_volume"], tmp_path)
    with pytest.raises(MissingPrerequisiteError) as info:
        run_figures(tmp_path, ["new_edges"], schools=small_bundle.schools)
    assert "degree_percentiles" in str(info.value)
    with pytest.raises(MissingPrerequisiteError):
        run_figures(tmp_path, ["homo_all"], schools=small_bundle.schools)
    with pytest.raises(UnknownMetricError):
        run_figures(tmp_path, ["sociogram"], schools=small_bundle.schools)


def test_regress_needs_metrics(small_bundle, tmp_path):
    with pytest.raises(MissingPrerequisiteError):
        run_regressions(small_bundle.schools, tmp_path)


def test_regress_records_models_that_cannot_be_fitted(metrics_dir, small_bundle):
    # 只有两个学校，协变量彼此共线
    summary = run_regressions(small_bundle.schools, metrics_dir)
    assert "persistence" in summary["failed"]
    assert not summary["models"]
    assert json.loads((metrics_dir / SUMMARY_FILE).read_text(encoding="utf-8")) == summary
    assert (metrics_dir / "regression_persistence_effects.csv").exists()


def _panel_schools(panel: pd.DataFrame) -> SchoolCovariates:
    rows = panel.drop_duplicates("school_id")
    records = []
    for row in rows.to_dict("records"):
        flags = {name: bool(row[name]) for name in PANEL_FLAGS if name != "placebo"}
        records.append(SchoolRecord(row["school_id"], greek_rate=row["greek_rate"], grad_rate=row["grad_rate"], class_size=1, **flags))
    return SchoolCovariates(records)


def test_regress_on_panels(tmp_path):
    persistence = generate_persistence_panel(n_classes=1400, seed=4)
    schools = _panel_schools(persistence)
    cells = pd.DataFrame({"grouping": "cohort", "key": persistence["cohort"], "share_cff": persistence["share_cff"], "n_ties": persistence["n_ties"]})
    cells.to_csv(tmp_path / "persistence.csv", index=False)
    homophily = generate_homophily_panel(n_schools=200, seed=4)
    homophily.assign(e_sum=0.0, expected=0.0)[HOMOPHILY_COLUMNS].to_csv(tmp_path / "homophily.csv", index=False)

    summary = run_regressions(schools, tmp_path)
    assert set(summary["models"]) == {"homophily_gender", "persistence"}
    assert summary["models"]["persistence"]["n_clusters"] == 200
    effects = pd.read_csv(tmp_path / "regression_persistence_effects.csv")
    assert set(effects["term"]) <= set(PERSISTENCE_COVARIATES)
    marginal = pd.read_csv(tmp_path / "regression_homophily_marginal.csv")
    assert set(marginal["idx"]) == set(range(-12, 60))
