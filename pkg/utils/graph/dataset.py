"""
数据集 - 边、属性、班级、学校协变量与亲密度表的一次性加载
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from ..core.errors import MissingInputError
from ..core.logging import setup_logger
from .attributes import AttributeTable
from .attributes import cohort_sizes
from .attributes import CohortKey
from .attributes import load_attributes
from .attributes import load_schools
from .attributes import SchoolCovariates
from .closeness import ClosenessTable
from .closeness import load_closeness
from .temporal import ingest_edges
from .temporal import TemporalEdgeList
from .timegrid import TimeGrid

logger = setup_logger(logger_name="Ingest", log_level="INFO")

DATA_FILES = {
    "edges": "edges.csv",
    "attributes": "attributes.csv",
    "cohorts": "cohorts.csv",
    "schools": "schools.csv",
    "closeness": "closeness.csv",
}


@dataclass(frozen=True, eq=False)
class DatasetBundle:
    """加载完成后只读，可在多个工作线程之间共享"""
    edges: TemporalEdgeList
    attributes: AttributeTable
    schools: SchoolCovariates
    closeness: Optional[ClosenessTable] = None
    paths: Optional[Dict[str, str]] = None

    def cohorts(self) -> List[CohortKey]:
        return self.attributes.cohorts()

    def grid(self, cohort: CohortKey, unit: str = "month") -> TimeGrid:
        return TimeGrid.for_cohort(self.attributes, cohort, unit)

    def summary(self) -> Dict[str, object]:
        return {
            "nodes": self.attributes.node_count,
            "edges": len(self.edges),
            "cohorts": len(self.cohorts()),
            "schools": len(self.schools),
            "closeness_rows": len(self.closeness) if self.closeness is not None else 0,
            "ingest": self.edges.report.as_dict(),
        }


def resolve_paths(data_dir: Optional[Union[str, Path]] = None, **explicit: Optional[str]) -> Dict[str, str]:
    """数据目录下的标准文件名，显式给出的路径优先"""
    paths: Dict[str, str] = {}
    for key, name in DATA_FILES.items():
        if explicit.get(key):
            paths[key] = str(explicit[key])
        elif data_dir is not None:
            paths[key] = str(Path(data_dir) / name)
    for key in ("edges", "attributes", "cohorts", "schools"):
        if key not in paths:
            raise MissingInputError(f"缺少 {key} 文件路径，请指定 --data-dir 或 --{key}")
        if not Path(paths[key]).exists():
            raise MissingInputError(f"{key} 文件不存在: {paths[key]}")
    if "closeness" in paths and not Path(paths["closeness"]).exists():
        if explicit.get("closeness"):
            raise MissingInputError(f"closeness 文件不存在: {paths['closeness']}")
        del paths["closeness"]
    return paths


def load_bundle(data_dir: Optional[Union[str, Path]] = None, **explicit: Optional[str]) -> DatasetBundle:
    """
    加载完整数据集

    属性表决定 id 映射（原始标识的自然顺序），边按该映射读取，
    引用无属性记录节点的边被剔除并计入 unknown_nodes。
    """
    paths = resolve_paths(data_dir, **explicit)
    attributes = load_attributes(paths["attributes"], paths["cohorts"])
    edges = ingest_edges(paths["edges"], id_map=attributes.node_ids)
    schools = load_schools(paths["schools"])
    closeness = load_closeness(paths["closeness"], attributes.node_ids) if "closeness" in paths else None

    missing = sorted(set(attributes.school_categories) - {r.school_id for r in schools.records()})
    if missing:
        logger.warning(f"以下学校没有协变量记录: {missing}")

    bundle = DatasetBundle(edges=edges, attributes=attributes, schools=schools, closeness=closeness, paths=paths)
    logger.info(f"数据集加载完成: {bundle.summary()}")
    return bundle


def filter_cohorts_by_class_size(bundle: DatasetBundle, low: float = 0.5, high: float = 1.25) -> List[CohortKey]:
    """只保留观测人数在报告班级规模 [low, high] 倍之间的班级"""
    kept = []
    for cohort, size in cohort_sizes(bundle.attributes).items():
        if cohort.school_id not in bundle.schools:
            continue
        reported = bundle.schools[cohort.school_id].class_size
        if low * reported <= size <= high * reported:
            kept.append(cohort)
        else:
            logger.info(f"班级 {cohort.label} 人数 {size} 与报告规模 {reported} 不符，已排除")
    return kept
