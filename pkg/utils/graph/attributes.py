"""
节点属性表、入学班级（cohort）与学校协变量
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, NamedTuple, Sequence, Union

from natsort import natsorted
import numpy as np
import pandas as pd

from ..core.errors import IngestError
from ..core.errors import UnknownCohortError
from ..core.logging import setup_logger
from .temporal import _first_bad_line
from .temporal import days_from_dates
from .temporal import read_csv_checked

logger = setup_logger(logger_name="Ingest", log_level="INFO")

ATTRIBUTE_COLUMNS = ("node_id", "school_id", "entry_year", "gender", "major", "hometown")
COHORT_COLUMNS = ("school_id", "entry_year", "start_date")
SCHOOL_FLAGS = ("is_private", "is_hbcu", "is_womens", "is_hispanic_serving", "is_religious", "is_commuter")
SCHOOL_RATES = ("greek_rate", "grad_rate")
SCHOOL_COLUMNS = ("school_id", ) + SCHOOL_FLAGS + SCHOOL_RATES + ("class_size", )

DIMENSIONS = ("gender", "entry_year", "major", "hometown")
UNKNOWN = -1
_UNKNOWN_LABELS = {"", "unknown", "na", "n/a", "none", "null"}


class CohortKey(NamedTuple):
    """入学班级 = (学校, 入学年份)"""
    school_id: str
    entry_year: int

    @property
    def label(self) -> str:
        return f"{self.school_id}:{self.entry_year}"

    @classmethod
    def parse(cls, label: str) -> "CohortKey":
        school_id, _, year = str(label).rpartition(":")
        if not school_id or not year.lstrip("-").isdigit():
            raise UnknownCohortError(f"无法解析的班级标识: {label}")
        return cls(school_id, int(year))


def _factorize(values: pd.Series, unknown_aware: bool = True):
    """类别编码：未知值编码为 -1，其余按自然顺序编号"""
    cleaned = values.fillna("").astype(str).str.strip()
    is_unknown = cleaned.str.lower().isin(_UNKNOWN_LABELS) if unknown_aware else pd.Series(False, index=cleaned.index)
    categories = natsorted(set(cleaned[~is_unknown].tolist()))
    codes = pd.Index(categories).get_indexer(cleaned)
    codes[is_unknown.to_numpy()] = UNKNOWN
    return codes.astype(np.int32), categories


@dataclass(frozen=True, eq=False)
class AttributeTable:
    """每个节点的人口学与班级属性，数组下标即 NodeId。

    school/gender/major/hometown 为类别编码（-1 表示未知），
    entry_year 为真实年份，start_date 为所属班级的开学日（天数）。
    """
    node_ids: np.ndarray
    school: np.ndarray
    school_categories: List[str]
    entry_year: np.ndarray
    gender: np.ndarray
    gender_categories: List[str]
    major: np.ndarray
    major_categories: List[str]
    hometown: np.ndarray
    hometown_categories: List[str]
    start_date: np.ndarray

    @classmethod
    def from_frames(cls, attributes: pd.DataFrame, cohorts: pd.DataFrame) -> "AttributeTable":
        """
        由属性表与班级开学日表构造，节点按原始标识的自然顺序编号

        参数:
            attributes: node_id,school_id,entry_year,gender,major,hometown
            cohorts: school_id,entry_year,start_date（start_date 为天数整数列）
        """
        frame = attributes.copy()
        frame["node_id"] = frame["node_id"].astype(str).str.strip()
        if frame["node_id"].duplicated().any():
            line = _first_bad_line(frame["node_id"].duplicated().to_numpy())
            raise IngestError(f"属性表第{line}行节点重复: {frame['node_id'].iloc[line - 2]}", line=line)

        order = natsorted(range(len(frame)), key=lambda k: frame["node_id"].iat[k])
        frame = frame.iloc[order].reset_index(drop=True)

        school, school_categories = _factorize(frame["school_id"], unknown_aware=False)
        gender, gender_categories = _factorize(frame["gender"])
        major, major_categories = _factorize(frame["major"])
        hometown, hometown_categories = _factorize(frame["hometown"])
        entry_year = frame["entry_year"].astype(int).to_numpy(dtype=np.int32)

        starts = {(str(s), int(y)): int(d) for s, y, d in zip(cohorts["school_id"], cohorts["entry_year"], cohorts["start_date"])}
        start_date = np.empty(len(frame), dtype=np.int32)
        for k, (s, y) in enumerate(zip(frame["school_id"].astype(str).tolist(), entry_year.tolist())):
            if (s, y) not in starts:
                raise IngestError(f"班级 {s}:{y} 缺少开学日期记录", line=k + 2)
            start_date[k] = starts[(s, y)]

        return cls(
            node_ids=frame["node_id"].to_numpy(dtype=object),
            school=school,
            school_categories=list(school_categories),
            entry_year=entry_year,
            gender=gender,
            gender_categories=list(gender_categories),
            major=major,
            major_categories=list(major_categories),
            hometown=hometown,
            hometown_categories=list(hometown_categories),
            start_date=start_date,
        )

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    def school_code(self, school_id: str) -> int:
        try:
            return self.school_categories.index(str(school_id))
        except ValueError as e:
            raise UnknownCohortError(f"未知学校: {school_id}") from e

    def cohorts(self) -> List[CohortKey]:
        """所有班级，按学校自然顺序、入学年份升序"""
        pairs = set(zip(self.school.tolist(), self.entry_year.tolist()))
        keys = [CohortKey(self.school_categories[s], y) for s, y in pairs]
        return natsorted(keys, key=lambda c: (c.school_id, c.entry_year))

    def cohort_mask(self, cohort: CohortKey) -> np.ndarray:
        mask = (self.school == self.school_code(cohort.school_id)) & (self.entry_year == cohort.entry_year)
        if not mask.any():
            raise UnknownCohortError(f"未知班级: {cohort.label}")
        return mask

    def cohort_members(self, cohort: CohortKey) -> np.ndarray:
        return np.flatnonzero(self.cohort_mask(cohort))

    def school_mask(self, school_id: str) -> np.ndarray:
        return self.school == self.school_code(school_id)

    def cohort_start(self, cohort: CohortKey) -> int:
        members = self.cohort_members(cohort)
        return int(self.start_date[members[0]])

    def feature_codes(self, dimension: str) -> np.ndarray:
        """某一维度的节点特征编码，entry_year 维度直接使用年份（没有未知值）"""
        if dimension not in DIMENSIONS:
            raise ValueError(f"未知的属性维度: {dimension}")
        return getattr(self, dimension)

    def feature_labels(self, dimension: str) -> List[str]:
        if dimension == "entry_year":
            return [str(y) for y in sorted(set(self.entry_year.tolist()))]
        return list(getattr(self, f"{dimension}_categories"))

    def gender_label(self, codes: np.ndarray) -> np.ndarray:
        """性别编码 -> 标签，未知为 U"""
        labels = np.array(list(self.gender_categories) + ["U"], dtype=object)
        return labels[np.where(codes < 0, len(self.gender_categories), codes)]

    def to_frame(self) -> pd.DataFrame:

        def decode(codes, categories):
            labels = np.array(list(categories) + ["unknown"], dtype=object)
            return labels[np.where(codes < 0, len(categories), codes)]

        return pd.DataFrame({
            "node_id": self.node_ids,
            "school_id": np.array(self.school_categories, dtype=object)[self.school],
            "entry_year": self.entry_year,
            "gender": decode(self.gender, self.gender_categories),
            "major": decode(self.major, self.major_categories),
            "hometown": decode(self.hometown, self.hometown_categories),
        })


@dataclass(frozen=True)
class SchoolRecord:
    """单个学校的协变量记录"""
    school_id: str
    is_private: bool = False
    is_hbcu: bool = False
    is_womens: bool = False
    is_hispanic_serving: bool = False
    is_religious: bool = False
    is_commuter: bool = False
    greek_rate: float = 0.0
    class_size: int = 1
    grad_rate: float = 0.5

    def __post_init__(self):
        for name in SCHOOL_RATES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"学校 {self.school_id} 的 {name}={value} 不在 [0,1] 内")
        if self.class_size < 1:
            raise ValueError(f"学校 {self.school_id} 的 class_size 必须为正整数")

    @property
    def school_type(self) -> str:
        return school_type(self)


def school_type(record) -> str:
    """学校类型分组：hbcu / womens / private / public"""
    if bool(record.is_hbcu):
        return "hbcu"
    if bool(record.is_womens):
        return "womens"
    return "private" if bool(record.is_private) else "public"


def _parse_bool(value) -> bool:
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "y", "t"):
        return True
    if text in ("0", "false", "no", "n", "f", ""):
        return False
    raise ValueError(f"无法解析的布尔值: {value}")


class SchoolCovariates:
    """学校协变量表，每个 school_id 一条记录"""

    def __init__(self, records: Sequence[SchoolRecord]):
        ids = [r.school_id for r in records]
        if len(set(ids)) != len(ids):
            raise IngestError(f"学校协变量表中存在重复的 school_id: {sorted({i for i in ids if ids.count(i) > 1})}")
        self._records: Dict[str, SchoolRecord] = {r.school_id: r for r in natsorted(records, key=lambda r: r.school_id)}

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, school_id: str) -> bool:
        return str(school_id) in self._records

    def __getitem__(self, school_id: str) -> SchoolRecord:
        try:
            return self._records[str(school_id)]
        except KeyError as e:
            raise UnknownCohortError(f"学校协变量表中没有 {school_id}") from e

    def records(self) -> List[SchoolRecord]:
        return list(self._records.values())

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for r in self._records.values():
            row = {"school_id": r.school_id}
            for name in SCHOOL_FLAGS:
                row[name] = int(getattr(r, name))
            for name in SCHOOL_RATES:
                row[name] = getattr(r, name)
            row["class_size"] = r.class_size
            row["school_type"] = r.school_type
            rows.append(row)
        return pd.DataFrame(rows, columns=list(SCHOOL_COLUMNS) + ["school_type"])

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "SchoolCovariates":
        records = []
        for k, row in enumerate(frame.to_dict("records")):
            try:
                records.append(
                    SchoolRecord(
                        school_id=str(row["school_id"]).strip(),
                        **{name: _parse_bool(row[name]) for name in SCHOOL_FLAGS},
                        **{name: float(row[name]) for name in SCHOOL_RATES},
                        class_size=int(float(row["class_size"])),
                    ))
            except (ValueError, TypeError) as e:
                raise IngestError(f"学校表第{k + 2}行无效: {e}", line=k + 2) from e
        return cls(records)


def load_attributes(attributes_path: Union[str, Path], cohorts_path: Union[str, Path]) -> AttributeTable:
    """读取属性表与班级开学日表"""
    attributes = read_csv_checked(attributes_path, ATTRIBUTE_COLUMNS, "属性")
    bad_year = ~attributes["entry_year"].str.strip().str.lstrip("-").str.isdigit()
    bad = bad_year.to_numpy() | (attributes["node_id"].str.strip() == "").to_numpy()
    if bad.any():
        line = _first_bad_line(bad)
        raise IngestError(f"属性表第{line}行格式错误: {attributes_path}", path=str(attributes_path), line=line)

    cohorts = read_csv_checked(cohorts_path, COHORT_COLUMNS, "班级")
    days = days_from_dates(cohorts["start_date"].str.strip())
    bad = days.isna().to_numpy() | ~cohorts["entry_year"].str.strip().str.lstrip("-").str.isdigit().to_numpy()
    if bad.any():
        line = _first_bad_line(bad)
        raise IngestError(f"班级表第{line}行格式错误: {cohorts_path}", path=str(cohorts_path), line=line)
    cohorts = pd.DataFrame({
        "school_id": cohorts["school_id"].str.strip(),
        "entry_year": cohorts["entry_year"].astype(int),
        "start_date": days.astype(int),
    })
    table = AttributeTable.from_frames(attributes, cohorts)
    logger.info(f"读取属性表 {attributes_path}: {table.node_count} 个节点, {len(table.cohorts())} 个班级")
    return table


def load_schools(path: Union[str, Path]) -> SchoolCovariates:
    frame = read_csv_checked(path, SCHOOL_COLUMNS, "学校")
    return SchoolCovariates.from_frame(frame)


def cohort_frame(attrs: AttributeTable) -> pd.DataFrame:
    """班级表 school_id,entry_year,start_date（ISO 日期）"""
    rows = []
    for cohort in attrs.cohorts():
        start = np.datetime64(attrs.cohort_start(cohort), "D")
        rows.append({"school_id": cohort.school_id, "entry_year": cohort.entry_year, "start_date": str(start)})
    return pd.DataFrame(rows, columns=list(COHORT_COLUMNS))


def cohort_sizes(attrs: AttributeTable) -> Dict[CohortKey, int]:
    counts: Dict[CohortKey, int] = {}
    for cohort in attrs.cohorts():
        counts[cohort] = int(attrs.cohort_mask(cohort).sum())
    return counts


def member_index(attrs: AttributeTable, members: np.ndarray) -> np.ndarray:
    """全局 NodeId -> 局部下标映射（不在 members 中的为 -1）"""
    local = np.full(attrs.node_count, -1, dtype=np.int64)
    local[members] = np.arange(len(members))
    return local
