"""
亲密度排名表 - 每个 ego 的好友按当前亲密度降序的排名（1 为最亲密）
"""
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..core.errors import IngestError
from ..core.logging import setup_logger
from .temporal import _first_bad_line
from .temporal import read_csv_checked

logger = setup_logger(logger_name="Ingest", log_level="INFO")

CLOSENESS_COLUMNS = ("ego_id", "alter_id", "rank")


@dataclass(frozen=True, eq=False)
class ClosenessTable:
    """ego/alter 为 NodeId，rank 在同一 ego 内唯一"""
    ego: np.ndarray
    alter: np.ndarray
    rank: np.ndarray

    def __post_init__(self):
        frame = pd.DataFrame({"ego": self.ego, "rank": self.rank})
        if frame.duplicated().any():
            raise ValueError("亲密度排名表中同一 ego 存在重复排名")
        if len(self.rank) and self.rank.min() < 1:
            raise ValueError("亲密度排名必须从 1 开始")

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "ClosenessTable":
        return cls(
            ego=frame["ego"].to_numpy(dtype=np.int64),
            alter=frame["alter"].to_numpy(dtype=np.int64),
            rank=frame["rank"].to_numpy(dtype=np.int64),
        )

    def __len__(self) -> int:
        return len(self.rank)

    @cached_property
    def _ego_index(self) -> np.ndarray:
        return np.unique(self.ego)

    @cached_property
    def _rank_index(self) -> pd.Series:
        """(ego, alter) -> rank，同一对出现多次时保留第一条"""
        index = pd.MultiIndex.from_arrays([self.ego, self.alter], names=["ego", "alter"])
        first = ~index.duplicated(keep="first")
        return pd.Series(self.rank[first].astype(float), index=index[first]).sort_index()

    def egos(self) -> np.ndarray:
        return self._ego_index

    def has_ego(self, ego: int) -> bool:
        pos = int(np.searchsorted(self._ego_index, ego))
        return pos < len(self._ego_index) and int(self._ego_index[pos]) == int(ego)

    def rank_of(self, ego: int, alter: int) -> Optional[int]:
        value = self._rank_index.get((int(ego), int(alter)))
        return None if value is None else int(value)

    def lookup(self, egos: np.ndarray, alters: np.ndarray) -> np.ndarray:
        """批量查询排名，ego 不在表中或 alter 不在 ego 名单中均返回 NaN"""
        query = pd.MultiIndex.from_arrays([np.asarray(egos, dtype=np.int64), np.asarray(alters, dtype=np.int64)], names=["ego", "alter"])
        return self._rank_index.reindex(query).to_numpy(dtype=float)

    def to_frame(self, id_map: Sequence) -> pd.DataFrame:
        id_map = np.asarray(id_map, dtype=object)
        return pd.DataFrame({"ego_id": id_map[self.ego], "alter_id": id_map[self.alter], "rank": self.rank})


def load_closeness(path: Union[str, Path], id_map: Sequence) -> ClosenessTable:
    """读取 ego_id,alter_id,rank，未知节点的行被忽略并记录警告"""
    frame = read_csv_checked(path, CLOSENESS_COLUMNS, "亲密度")
    bad = ~frame["rank"].str.strip().str.isdigit().to_numpy()
    if bad.any():
        line = _first_bad_line(bad)
        raise IngestError(f"亲密度文件第{line}行格式错误: {path}", path=str(path), line=line)

    lookup: Dict[str, int] = {str(name): k for k, name in enumerate(id_map)}
    ego = frame["ego_id"].str.strip().map(lookup)
    alter = frame["alter_id"].str.strip().map(lookup)
    known = ego.notna() & alter.notna()
    if (~known).any():
        logger.warning(f"{path}: {int((~known).sum())} 行引用未知节点，已忽略")
    table = pd.DataFrame({"ego": ego[known].astype(np.int64), "alter": alter[known].astype(np.int64), "rank": frame["rank"][known].astype(np.int64)})
    try:
        return ClosenessTable.from_frame(table)
    except ValueError as e:
        raise IngestError(f"亲密度文件无效: {path}: {e}", path=str(path)) from e
