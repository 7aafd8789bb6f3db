"""
指标流水线 - 按班级并行计算所选指标并写出 CSV 与运行清单

每个班级是一个独立任务，结果按班级的自然顺序合并，与线程数和完成顺序无关。
"""
from dataclasses import dataclass
from pathlib import Path
import time
from typing import Dict, Iterable, List, Optional, Sequence

from natsort import natsorted
import numpy as np
import pandas as pd

from ..core.config import Config
from ..core.errors import MissingInputError
from ..core.errors import UnknownMetricError
from ..core.logging import cohort_logger
from ..core.logging import setup_task_logger
from ..graph.attributes import CohortKey
from ..graph.dataset import DatasetBundle
from ..graph.dataset import filter_cohorts_by_class_size
from ..graph.snapshot import Scope
from ..graph.snapshot import ScopedEvents
from ..graph.snapshot import SnapshotChain
from ..graph.timegrid import TimeGrid
from ..metrics.centrality import centrality_series
from ..metrics.centrality import position_sample
from ..metrics.centrality import rank_churn
from ..metrics.centrality import rank_correlation_matrix
from ..metrics.centrality import ranks_frame
from ..metrics.formation import closure_frame
from ..metrics.formation import cross_cohort_volume
from ..metrics.formation import degree_percentiles_from_events
from ..metrics.formation import edge_volume_from_events
from ..metrics.formation import triadic_closure_series
from ..metrics.homophily import homophily_table
from ..metrics.persistence import cells_from_evaluations
from ..metrics.persistence import evaluate_ties
from ..metrics.persistence import GROUPINGS
from ..metrics.persistence import persistence_frame
from ..metrics.persistence import school_scatter
from ..metrics.series import series_frame
from ..metrics.structure import cross_cohort_path_series
from ..metrics.structure import structure_series
from ..system.seeds import derive_seed
from ..system.task_pool import CohortTaskExecutor
from .manifest import RunManifest

logger = setup_task_logger(logger_name="Pipeline")

METRIC_NAMES = (
    "edge_volume",
    "cross_cohort_volume",
    "degree_percentiles",
    "triadic_closure",
    "homophily",
    "structure",
    "cross_cohort_path",
    "centrality",
    "persistence",
)

# 每个指标写出的文件（不含扩展名）
OUTPUT_FILES = {
    "edge_volume": ("edge_volume", ),
    "cross_cohort_volume": ("cross_cohort_volume", ),
    "degree_percentiles": ("degree_percentiles", ),
    "triadic_closure": ("triadic_closure", ),
    "homophily": ("homophily", ),
    "structure": ("structure", ),
    "cross_cohort_path": ("cross_cohort_path", ),
    "centrality": ("centrality_ranks", "centrality_correlation", "centrality_churn", "centrality_positions"),
    "persistence": ("persistence", "persistence_scatter", "persistence_correlations"),
}


def parse_selection(selection: Optional[Iterable[str]]) -> List[str]:
    """
    校验并规范化指标选择，保持 METRIC_NAMES 中的顺序

    参数:
        selection: 指标名列表或逗号分隔的字符串，None / 空表示不计算任何指标

    异常:
        UnknownMetricError: 出现未知指标名，错误信息列出全部有效名称
    """
    if selection is None:
        return []
    if isinstance(selection, str):
        selection = selection.split(",")
    names = {name.strip() for name in selection if name.strip()}
    unknown = sorted(names - set(METRIC_NAMES))
    if unknown:
        raise UnknownMetricError(f"未知的指标: {', '.join(unknown)}；有效名称: {', '.join(METRIC_NAMES)}")
    return [name for name in METRIC_NAMES if name in names]


@dataclass(frozen=True)
class MetricOptions:
    """metrics 命令的选项；b_rule 默认 endpoint（端点份额），either 为任一端份额，见 utils/metrics/homophily.py"""
    unit: str = "month"
    scope: Scope = Scope.COHORT
    top_k: Optional[int] = None
    path_threshold: Optional[int] = None
    path_samples: Optional[int] = None
    b_rule: str = "endpoint"
    directed: bool = True
    class_size_filter: bool = False
    exclude_recent_years: int = 0

    def resolved(self) -> Dict[str, object]:
        """填入配置默认值后的参数，写入清单"""
        config = Config()
        return {
            "top_k": self.top_k or config.cff_top_k,
            "path_threshold": self.path_threshold or config.path_exact_threshold,
            "path_samples": self.path_samples or config.path_sample_sources,
            "b_rule": self.b_rule,
            "directed": self.directed,
            "class_size_filter": self.class_size_filter,
            "exclude_recent_years": self.exclude_recent_years,
            "grid_months_before": config.grid_months_before,
            "grid_months_after": config.grid_months_after,
        }


def _series_with(series: Dict, column: str) -> pd.DataFrame:
    frames = [series_frame([item], **{column: str(key)}) for key, item in series.items()]
    return pd.concat(frames, ignore_index=True)


def _cohort_metrics(cohort: CohortKey, bundle: DatasetBundle, selection: Sequence[str], options: MetricOptions, params: Dict[str, object]) -> Dict[str, pd.DataFrame]:
    """单个班级的全部按班级指标"""
    edges, attrs = bundle.edges, bundle.attributes
    grid = TimeGrid.for_cohort(attrs, cohort, options.unit)
    member_count = len(attrs.cohort_members(cohort))
    outputs: Dict[str, pd.DataFrame] = {}
    log = cohort_logger(logger, cohort.label)
    log.debug(f"开始计算: {member_count} 名成员, 时间桶 [{grid.lo}, {grid.hi})")
    start = time.time()

    if "edge_volume" in selection:
        scoped = ScopedEvents.build(edges, attrs, grid, options.scope)
        outputs["edge_volume"] = edge_volume_from_events(scoped, member_count).to_frame()
    if "cross_cohort_volume" in selection:
        outputs["cross_cohort_volume"] = _series_with(cross_cohort_volume(edges, attrs, grid), "counterpart_year")
    if "degree_percentiles" in selection:
        scoped = ScopedEvents.build(edges, attrs, grid, Scope.COHORT)
        outputs["degree_percentiles"] = _series_with({f"{p:g}": s for p, s in degree_percentiles_from_events(scoped).items()}, "percentile")
    if "triadic_closure" in selection:
        chain = SnapshotChain.build(edges, attrs, grid, options.scope)
        outputs["triadic_closure"] = closure_frame(cohort.label, triadic_closure_series(chain), options.scope)
    if "homophily" in selection:
        scoped = ScopedEvents.build(edges, attrs, grid, Scope.SCHOOL)
        outputs["homophily"] = homophily_table(scoped, attrs, b_rule=options.b_rule)
    if "structure" in selection:
        chain = SnapshotChain.build(edges, attrs, grid, Scope.COHORT)
        outputs["structure"] = structure_series(chain, member_count=member_count, sample_size=params["path_samples"], exact_threshold=params["path_threshold"])
    if "cross_cohort_path" in selection:
        counterparts = [c for c in bundle.cohorts() if c.school_id == cohort.school_id]
        paths = cross_cohort_path_series(edges, attrs, grid, counterparts, sample_size=params["path_samples"])
        outputs["cross_cohort_path"] = _series_with(paths, "counterpart")
    if "centrality" in selection:
        vectors = centrality_series(SnapshotChain.build(edges, attrs, grid, Scope.COHORT))
        outputs["centrality_ranks"] = ranks_frame(cohort, vectors, attrs.node_ids)
        outputs["centrality_correlation"] = rank_correlation_matrix(cohort, grid, vectors).to_frame()
        churn = rank_churn(cohort, grid, vectors).to_frame()
        outputs["centrality_churn"] = churn.rename(columns={"value": "churn"})[["cohort", "idx", "churn"]]
        positions = position_sample(vectors, seed=derive_seed("position", cohort.label))
        positions["node"] = attrs.node_ids[positions["node"].to_numpy(dtype=np.int64)]
        positions.insert(0, "cohort", cohort.label)
        outputs["centrality_positions"] = positions

    log.debug(f"指标计算完成: {sorted(outputs)}，耗时 {time.time() - start:.2f}秒")
    return outputs


def _persistence_outputs(bundle: DatasetBundle, cohorts: Sequence[CohortKey], options: MetricOptions, k: int) -> Dict[str, pd.DataFrame]:
    if bundle.closeness is None:
        raise MissingInputError("persistence 指标需要亲密度文件 closeness.csv")
    attrs = bundle.attributes
    kept = {(c.school_id, c.entry_year) for c in cohorts}
    frame, coverage = evaluate_ties(bundle.edges, attrs, bundle.closeness, k, directed=options.directed)
    ego = frame["ego"].to_numpy(dtype=int)
    in_scope = [(attrs.school_categories[s], int(y)) in kept for s, y in zip(attrs.school[ego].tolist(), attrs.entry_year[ego].tolist())]
    frame = frame[in_scope]
    logger.info(f"CFF 评估: {coverage.as_dict()}")

    cells = []
    for grouping in GROUPINGS:
        cells.extend(cells_from_evaluations(grouping, frame, attrs, options.exclude_recent_years if grouping == "formation_week" else 0))

    points, correlations = [], []
    for year in sorted({c.entry_year for c in cohorts}):
        scatter = school_scatter(year, bundle.edges, attrs, bundle.schools, bundle.closeness, k)
        points.append(scatter.points.assign(entry_year=year))
        for measure, value in scatter.correlations.items():
            value = value or {}
            correlations.append({"entry_year": year, "measure": measure, "rho": value.get("rho"), "t": value.get("t"), "n": value.get("n")})
    scatter_columns = ["entry_year", "school_id", "school_type", "members", "mean_college_friends", "mean_cff_friends", "share_cff", "n_ties"]
    return {
        "persistence": persistence_frame(cells),
        "persistence_scatter": pd.concat(points, ignore_index=True)[scatter_columns] if points else pd.DataFrame(columns=scatter_columns),
        "persistence_correlations": pd.DataFrame(correlations, columns=["entry_year", "measure", "rho", "t", "n"]),
    }


def select_cohorts(bundle: DatasetBundle, class_size_filter: bool = False) -> List[CohortKey]:
    cohorts = natsorted(bundle.cohorts(), key=lambda c: c.label)
    if class_size_filter:
        kept = set(filter_cohorts_by_class_size(bundle))
        cohorts = [c for c in cohorts if c in kept]
    return cohorts


def write_frame(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, encoding="utf-8", na_rep="")


def run_metrics(bundle: DatasetBundle, selection: Optional[Iterable[str]], out_dir, options: Optional[MetricOptions] = None, workers: Optional[int] = None,
                progress: bool = False, backend: Optional[str] = None) -> RunManifest:
    """
    计算所选指标并写出 <out_dir>/<文件>.csv 与 manifest.json

    参数:
        bundle: 已校验的数据集
        selection: 指标名（见 METRIC_NAMES），空选择只写清单
        out_dir: 输出目录
        options: 时间单位、作用域与各阈值
        workers: 并行班级数，默认配置 PIPELINE_WORKERS
        backend: process | thread，默认配置 PIPELINE_BACKEND；结果与后端和并行数无关

    返回:
        写出的 RunManifest
    """
    names = parse_selection(selection)
    options = options or MetricOptions()
    params = options.resolved()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cohorts = select_cohorts(bundle, options.class_size_filter)
    start = time.time()

    per_cohort = [name for name in names if name != "persistence"]
    if per_cohort:
        executor = CohortTaskExecutor(max_workers=workers, backend=backend)
        results = executor.map_ordered(_cohort_metrics, cohorts, bundle, per_cohort, options, params, progress=progress)
        for name in per_cohort:
            for output in OUTPUT_FILES[name]:
                frames = [r[output] for r in results if output in r and not r[output].empty]
                frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
                write_frame(frame, out_dir / f"{output}.csv")
        logger.info(f"按班级指标完成: {len(cohorts)} 个班级, {executor.get_pool_stats()}")
    if "persistence" in names:
        for output, frame in _persistence_outputs(bundle, cohorts, options, int(params["top_k"])).items():
            write_frame(frame, out_dir / f"{output}.csv")

    manifest = RunManifest(
        inputs=dict(bundle.paths or {}),
        scope=Scope(options.scope).value,
        unit=options.unit,
        metrics=names,
        root_seed=Config().root_seed,
        output_dir=str(out_dir),
        parameters=params,
        cohorts=[c.label for c in cohorts],
    )
    manifest.write(out_dir)
    logger.info(f"指标流水线完成: {names or '仅清单'}，耗时 {time.time() - start:.1f}秒")
    return manifest
