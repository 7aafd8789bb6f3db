"""
数据集写出 - 按读取端的文件名和列格式输出 CSV
"""
from pathlib import Path
from typing import Dict, Union

from ..core.logging import setup_logger
from ..graph.attributes import cohort_frame
from ..graph.attributes import SCHOOL_COLUMNS
from ..graph.dataset import DATA_FILES
from ..graph.dataset import DatasetBundle
from ..graph.temporal import write_edges

logger = setup_logger(logger_name="Synth", log_level="INFO")


def write_dataset(bundle: DatasetBundle, out_dir: Union[str, Path]) -> Dict[str, str]:
    """
    写出 edges / attributes / cohorts / schools / closeness 五个文件

    参数:
        bundle: 数据集
        out_dir: 输出目录，不存在时创建

    返回:
        {文件类型: 路径}
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {name: str(out_dir / filename) for name, filename in DATA_FILES.items()}

    write_edges(bundle.edges, paths["edges"])
    bundle.attributes.to_frame().to_csv(paths["attributes"], index=False, encoding="utf-8")
    cohort_frame(bundle.attributes).to_csv(paths["cohorts"], index=False, encoding="utf-8")
    bundle.schools.to_frame()[list(SCHOOL_COLUMNS)].to_csv(paths["schools"], index=False, encoding="utf-8")
    if bundle.closeness is not None:
        bundle.closeness.to_frame(bundle.attributes.node_ids).to_csv(paths["closeness"], index=False, encoding="utf-8")
    else:
        paths.pop("closeness")

    logger.info(f"数据集已写出到 {out_dir}: {bundle.attributes.node_count} 个节点, {len(bundle.edges)} 条边")
    return paths
