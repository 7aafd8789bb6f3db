"""
图表数据 - 由指标与回归输出生成整理好的长表，每张图一个 CSV（figures/<图名>.csv）

只输出绘图所需的数据，不渲染图像。
"""
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

from natsort import natsorted
import numpy as np
import pandas as pd

from ..core.config import Config
from ..core.errors import MissingPrerequisiteError
from ..core.errors import UnknownMetricError
from ..core.logging import setup_task_logger
from ..graph.attributes import CohortKey
from ..graph.attributes import load_schools
from ..graph.attributes import SchoolCovariates
from ..metrics.series import aggregate_series
from ..metrics.series import MetricSeries
from .manifest import RunManifest
from .regress import read_metric
from .runner import write_frame

logger = setup_task_logger(logger_name="Pipeline")

FIGURE_NAMES = (
    "new_edges",
    "crossyear",
    "homo_avg",
    "homo_avg_cum",
    "homo_all",
    "path",
    "position_time",
    "evcent_snapshots",
    "evcent_correlation_a",
    "evcent_correlation_b",
    "persistence_time",
    "persistence_time_gender",
    "persistence_sample",
    "persistence_coef",
)
STRUCTURE_STATISTICS = ("lcc_fraction", "avg_clustering", "modularity", "avg_path")
AGGREGATE_COLUMNS = ["idx", "mean", "std_err", "n_cohorts"]


def _series(frame: pd.DataFrame, value: str, metric: str, unit: str, count: Optional[str] = "sample_count") -> List[MetricSeries]:
    """按 cohort 拆分长表为 MetricSeries；count 为 None 时以值是否存在作为样本量"""
    series = []
    for label in natsorted(frame["cohort"].unique()):
        rows = frame[frame["cohort"] == label].sort_values("idx")
        values = rows[value].to_numpy(dtype=float)
        counts = rows[count].to_numpy(dtype=np.int64) if count else (~np.isnan(values)).astype(np.int64)
        series.append(MetricSeries.build(CohortKey.parse(label), metric, unit, rows["idx"].to_numpy(), values, counts))
    return series


def _aggregate(frame: pd.DataFrame, value: str, unit: str, count: Optional[str] = "sample_count", min_samples: int = 1, **labels: str) -> pd.DataFrame:
    result = aggregate_series(_series(frame, value, value, unit, count), weighting="cohort", min_samples=min_samples)
    for pos, (name, label) in enumerate(labels.items()):
        result.insert(pos, name, label)
    return result


def _stack(frames: List[pd.DataFrame], columns: List[str]) -> pd.DataFrame:
    frames = [f for f in frames if not f.empty]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)


def figure_new_edges(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    """新边数、度数百分位数与三元闭包，跨班级平均"""
    unit = manifest.unit
    frames = [_aggregate(read_metric(out_dir, "edge_volume", "metrics --metrics edge_volume"), "value", unit, series="edge_volume")]
    percentiles = read_metric(out_dir, "degree_percentiles", "metrics --metrics degree_percentiles")
    for p in natsorted(percentiles["percentile"].astype(str).unique()):
        frames.append(_aggregate(percentiles[percentiles["percentile"].astype(str) == p], "value", unit, series=f"degree_p{p}"))
    closure = read_metric(out_dir, "triadic_closure", "metrics --metrics triadic_closure")
    for column in ("share_closing", "mean_triangles_closed"):
        frames.append(_aggregate(closure, column, unit, count="new_edge_count", series=column))
    return _stack(frames, ["series"] + AGGREGATE_COLUMNS)


def figure_crossyear(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    """按对方入学年份与本班级的年份差分组的新边数"""
    frame = read_metric(out_dir, "cross_cohort_volume", "metrics --metrics cross_cohort_volume")
    years = np.array([CohortKey.parse(c).entry_year for c in frame["cohort"]])
    frame = frame.assign(relation=frame["counterpart_year"].to_numpy(dtype=int) - years)
    frames = [_aggregate(frame[frame["relation"] == r], "value", manifest.unit, relation=f"{r:+d}") for r in sorted(frame["relation"].unique())]
    return _stack(frames, ["relation"] + AGGREGATE_COLUMNS)


def _homophily_average(out_dir: Path, manifest: RunManifest, mode: str) -> pd.DataFrame:
    frame = read_metric(out_dir, "homophily", "metrics --metrics homophily")
    frame = frame[frame["mode"] == mode]
    min_samples = Config().homophily_min_incidences
    frames = []
    for dimension in frame["dimension"].unique():
        rows = frame[frame["dimension"] == dimension]
        frames.append(_aggregate(rows, "H", manifest.unit, count="n_incidences", min_samples=min_samples, dimension=dimension))
    return _stack(frames, ["dimension"] + AGGREGATE_COLUMNS)


def figure_homo_avg(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    return _homophily_average(out_dir, manifest, "new")


def figure_homo_avg_cum(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    return _homophily_average(out_dir, manifest, "cumulative")


def figure_homo_all(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    """每个维度、每个协变量的逐月交互项估计"""
    frame = read_metric(out_dir, "regression_homophily_marginal", "regress")
    frame.insert(0, "dimension", frame["model"].str.replace("homophily_", "", regex=False))
    return frame.drop(columns=["model"])


def figure_path(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    """本班级与其他入学年份学生之间的平均最短路径，按年份差分组"""
    frame = read_metric(out_dir, "cross_cohort_path", "metrics --metrics cross_cohort_path")
    own = np.array([CohortKey.parse(c).entry_year for c in frame["cohort"]])
    other = np.array([CohortKey.parse(c).entry_year for c in frame["counterpart"]])
    frame = frame.assign(relation=other - own)
    frames = [_aggregate(frame[frame["relation"] == r], "value", manifest.unit, relation=f"{r:+d}") for r in sorted(frame["relation"].unique())]
    return _stack(frames, ["relation"] + AGGREGATE_COLUMNS)


def figure_position_time(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    """四项结构指标按学校类型平均"""
    frame = read_metric(out_dir, "structure", "metrics --metrics structure")
    types = {r.school_id: r.school_type for r in schools.records()}
    frame = frame.assign(school_type=[types.get(CohortKey.parse(c).school_id, "unknown") for c in frame["cohort"]])
    frames = []
    for statistic in STRUCTURE_STATISTICS:
        for school_type in sorted(frame["school_type"].unique()):
            rows = frame[frame["school_type"] == school_type]
            frames.append(_aggregate(rows, statistic, manifest.unit, count=None, statistic=statistic, school_type=school_type))
    return _stack(frames, ["statistic", "school_type"] + AGGREGATE_COLUMNS)


def figure_evcent_snapshots(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    return read_metric(out_dir, "centrality_positions", "metrics --metrics centrality")


def figure_evcent_correlation_a(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    """各班级秩相关矩阵的逐格平均"""
    frame = read_metric(out_dir, "centrality_correlation", "metrics --metrics centrality").dropna(subset=["corr"])
    grouped = frame.groupby(["idx_a", "idx_b"], sort=True)["corr"].agg(["mean", "count"]).reset_index()
    return grouped.rename(columns={"mean": "mean_corr", "count": "n_cohorts"})


def figure_evcent_correlation_b(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    frame = read_metric(out_dir, "centrality_churn", "metrics --metrics centrality")
    return _aggregate(frame, "churn", manifest.unit, count=None)


def _persistence(out_dir: Path, grouping: str) -> pd.DataFrame:
    frame = read_metric(out_dir, "persistence", "metrics --metrics persistence")
    return frame[frame["grouping"] == grouping].reset_index(drop=True)


def figure_persistence_time(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    """按关系形成的周（相对开学日）分组的 CFF 占比"""
    frame = _persistence(out_dir, "formation_week")
    frame = frame.assign(week=frame["key"].astype(int)).sort_values("week", kind="mergesort")
    return frame[["week", "share_cff", "n_ties"]].reset_index(drop=True)


def figure_persistence_time_gender(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    frame = _persistence(out_dir, "cohort_gender")
    if frame.empty:
        return pd.DataFrame(columns=["entry_year", "gender_pair", "share_cff", "n_ties"])
    parts = frame["key"].astype(str).str.split(":", n=1, expand=True)
    result = pd.DataFrame({"entry_year": parts[0].astype(int), "gender_pair": parts[1], "share_cff": frame["share_cff"], "n_ties": frame["n_ties"]})
    return result.sort_values(["gender_pair", "entry_year"], kind="mergesort").reset_index(drop=True)


def figure_persistence_sample(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    return read_metric(out_dir, "persistence_scatter", "metrics --metrics persistence")


def figure_persistence_coef(out_dir: Path, manifest: RunManifest, schools: SchoolCovariates) -> pd.DataFrame:
    """持续性模型的协变量系数（年份固定效应不输出）"""
    return read_metric(out_dir, "regression_persistence_effects", "regress")


FIGURES: Dict[str, Callable[[Path, RunManifest, SchoolCovariates], pd.DataFrame]] = {
    "new_edges": figure_new_edges,
    "crossyear": figure_crossyear,
    "homo_avg": figure_homo_avg,
    "homo_avg_cum": figure_homo_avg_cum,
    "homo_all": figure_homo_all,
    "path": figure_path,
    "position_time": figure_position_time,
    "evcent_snapshots": figure_evcent_snapshots,
    "evcent_correlation_a": figure_evcent_correlation_a,
    "evcent_correlation_b": figure_evcent_correlation_b,
    "persistence_time": figure_persistence_time,
    "persistence_time_gender": figure_persistence_time_gender,
    "persistence_sample": figure_persistence_sample,
    "persistence_coef": figure_persistence_coef,
}


def run_figures(out_dir: Union[str, Path], names: Optional[List[str]] = None, schools: Optional[SchoolCovariates] = None) -> Dict[str, str]:
    """
    生成图表数据

    参数:
        out_dir: metrics / regress 的输出目录，图表写到其下的 figures/
        names: 只生成这些图，默认全部
        schools: 学校协变量，默认按清单中的输入路径读取

    返回:
        {图名: 文件路径}

    异常:
        MissingPrerequisiteError: 所需的上游文件不存在，信息中包含应先运行的命令
    """
    unknown = sorted(set(names or ()) - set(FIGURE_NAMES))
    if unknown:
        raise UnknownMetricError(f"未知的图表: {', '.join(unknown)}；有效名称: {', '.join(FIGURE_NAMES)}")
    out_dir = Path(out_dir)
    manifest = RunManifest.load(out_dir)
    if schools is None:
        if "schools" not in manifest.inputs:
            raise MissingPrerequisiteError("清单中没有学校协变量文件路径")
        schools = load_schools(manifest.inputs["schools"])
    figure_dir = out_dir / "figures"
    figure_dir.mkdir(parents=True, exist_ok=True)

    written = {}
    for name in names or FIGURE_NAMES:
        frame = FIGURES[name](out_dir, manifest, schools)
        path = figure_dir / f"{name}.csv"
        write_frame(frame, path)
        written[name] = str(path)
        logger.debug(f"图表 {name}: {len(frame)} 行")
    logger.info(f"图表数据已写出: {len(written)} 个")
    return written
