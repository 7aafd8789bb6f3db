"""
时间边序列 - 带时间戳的无向好友关系事件的读取与存储
"""
from collections.abc import Sequence
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Dict, Iterator, NamedTuple, Optional, Union

from natsort import natsorted
import numpy as np
import pandas as pd

from ..core.errors import IngestError
from ..core.errors import MissingInputError
from ..core.logging import setup_logger

logger = setup_logger(logger_name="Ingest", log_level="INFO")

EDGE_COLUMNS = ("src_id", "dst_id", "date")


class EdgeEvent(NamedTuple):
    """一条好友关系事件，u < v，t 为距 1970-01-01 的天数"""
    u: int
    v: int
    t: int


@dataclass
class IngestReport:
    rows: int = 0
    accepted: int = 0
    self_loops: int = 0
    duplicates: int = 0
    unknown_nodes: int = 0

    def as_dict(self) -> Dict[str, int]:
        return {
            "rows": self.rows,
            "accepted": self.accepted,
            "self_loops": self.self_loops,
            "duplicates": self.duplicates,
            "unknown_nodes": self.unknown_nodes,
        }


@dataclass(frozen=True, eq=False)
class TemporalEdgeList(Sequence):
    """按时间升序排列的去重无向边事件。

    u/v/t 为等长 int 数组，满足 u < v；相同 (u, v) 只保留最早的 t。
    id_map[k] 是 NodeId k 对应的原始节点标识。
    """
    u: np.ndarray
    v: np.ndarray
    t: np.ndarray
    id_map: np.ndarray
    report: IngestReport = field(default_factory=IngestReport)

    @classmethod
    def from_arrays(cls, u, v, t, id_map=None, report: Optional[IngestReport] = None) -> "TemporalEdgeList":
        """由端点和日期数组构造：规范化端点顺序、剔除自环、重复边保留最早时间、按时间排序。"""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        t = np.asarray(t, dtype=np.int64)
        report = report or IngestReport(rows=len(u))

        loops = u == v
        if loops.any():
            report.self_loops += int(loops.sum())
            u, v, t = u[~loops], v[~loops], t[~loops]

        lo = np.minimum(u, v)
        hi = np.maximum(u, v)

        # 先按 (u, v, t) 排序，每个端点对取第一条即最早时间
        order = np.lexsort((t, hi, lo))
        lo, hi, t = lo[order], hi[order], t[order]
        if len(lo):
            first = np.ones(len(lo), dtype=bool)
            first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
            report.duplicates += int((~first).sum())
            lo, hi, t = lo[first], hi[first], t[first]

        order = np.lexsort((hi, lo, t))
        lo, hi, t = lo[order], hi[order], t[order]
        report.accepted = len(lo)

        if id_map is None:
            n = int(hi.max()) + 1 if len(hi) else 0
            id_map = np.array([str(k) for k in range(n)], dtype=object)
        return cls(u=lo.astype(np.int32), v=hi.astype(np.int32), t=t.astype(np.int32), id_map=np.asarray(id_map, dtype=object), report=report)

    @property
    def node_count(self) -> int:
        return len(self.id_map)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, item: Union[int, slice]):
        if isinstance(item, slice):
            return TemporalEdgeList(self.u[item], self.v[item], self.t[item], self.id_map, self.report)
        return EdgeEvent(int(self.u[item]), int(self.v[item]), int(self.t[item]))

    def __iter__(self) -> Iterator[EdgeEvent]:
        for a, b, c in zip(self.u.tolist(), self.v.tolist(), self.t.tolist()):
            yield EdgeEvent(a, b, c)

    def select(self, mask: np.ndarray) -> "TemporalEdgeList":
        """按布尔掩码或位置数组取子序列，保持时间顺序"""
        return TemporalEdgeList(self.u[mask], self.v[mask], self.t[mask], self.id_map, self.report)

    def to_frame(self) -> pd.DataFrame:
        """导出为 src_id,dst_id,date 三列"""
        dates = pd.to_datetime(self.t.astype("datetime64[D]")).strftime("%Y-%m-%d")
        return pd.DataFrame({"src_id": self.id_map[self.u], "dst_id": self.id_map[self.v], "date": dates})


def days_from_dates(values: pd.Series) -> pd.Series:
    """ISO 日期字符串 -> 距纪元的天数（无法解析的为 NaN）"""
    parsed = pd.to_datetime(values, format="%Y-%m-%d", errors="coerce")
    days = (parsed - pd.Timestamp("1970-01-01")).dt.days
    return days


def read_csv_checked(path: Union[str, Path], required: Sequence, label: str) -> pd.DataFrame:
    """读取带表头的 UTF-8 CSV，所有列按字符串处理，检查必需列"""
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"{label}文件不存在: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise IngestError(f"{label}文件无法解析: {path}: {e}", path=str(path)) from e
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise IngestError(f"{label}文件缺少列 {missing}: {path}", path=str(path), line=1)
    return frame


def _first_bad_line(mask: np.ndarray) -> int:
    # 表头为第1行，数据从第2行开始
    return int(np.flatnonzero(mask)[0]) + 2


def ingest_edges(path: Union[str, Path], id_map: Optional[Sequence] = None) -> TemporalEdgeList:
    """
    读取边 CSV（src_id,dst_id,date）

    参数:
        path: CSV 路径
        id_map: 已有的节点标识映射（通常来自属性表）。为空时由边端点按自然顺序生成。

    返回:
        TemporalEdgeList，其 report 记录行数、自环、重复、未知节点等计数
    """
    frame = read_csv_checked(path, EDGE_COLUMNS, "边")
    src = frame["src_id"].str.strip()
    dst = frame["dst_id"].str.strip()
    days = days_from_dates(frame["date"].str.strip())

    bad = (src == "").to_numpy() | (dst == "").to_numpy() | days.isna().to_numpy()
    if bad.any():
        line = _first_bad_line(bad)
        raise IngestError(f"边文件第{line}行格式错误: {path}", path=str(path), line=line)

    report = IngestReport(rows=len(frame))
    if id_map is None:
        id_map = natsorted(set(src.tolist()) | set(dst.tolist()))
    id_map = np.asarray(list(id_map), dtype=object)
    lookup = pd.Index(id_map)

    u = lookup.get_indexer(src)
    v = lookup.get_indexer(dst)
    unknown = (u < 0) | (v < 0)
    if unknown.any():
        report.unknown_nodes = int(unknown.sum())
        logger.warning(f"{path}: {report.unknown_nodes} 行引用了没有属性记录的节点，已剔除")

    edges = TemporalEdgeList.from_arrays(u[~unknown], v[~unknown], days.to_numpy()[~unknown].astype(np.int64), id_map=id_map, report=report)
    if report.self_loops:
        logger.warning(f"{path}: 剔除自环 {report.self_loops} 行")
    logger.info(f"读取边文件 {path}: {report.rows} 行, 保留 {report.accepted} 条, 重复 {report.duplicates}")
    return edges


def write_edges(edges: TemporalEdgeList, path: Union[str, Path]) -> None:
    edges.to_frame().to_csv(path, index=False, encoding="utf-8")

