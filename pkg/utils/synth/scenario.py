"""
合成场景配置 - 形成机制参数、学校规格与预设

场景文件为 JSON，键说明见 config/scenario_sample.json。
"""
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from dataclasses import replace
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..core.errors import CohortNetError
from ..core.errors import InfeasibleScenarioError
from ..core.errors import MissingInputError
from ..graph.attributes import SchoolRecord


@dataclass(frozen=True)
class MechanismConfig:
    """
    关系形成机制

    速率单位为每名成员每月发起的新边期望数；
    seasonal 系数按学年内的月份（开学月为0）作用于 base_rate。
    """
    base_rate: float = 1.0
    pre_college_rate: float = 0.08
    post_college_rate: float = 0.1
    burst_intensity: float = 8.0
    start_of_year: float = 2.5
    mid_year: float = 1.3
    summer: float = 0.3
    yearly_decay: float = 0.75
    same_cohort_share: float = 0.7
    triadic_closure: float = 0.85
    pre_college_closure: float = 0.1
    gender_weight: float = 0.05
    major_weight: float = 0.1
    hometown_weight: float = 0.02
    pre_college_hometown: float = 0.4
    greek_rush_months: Tuple[int, ...] = (0, 1)
    greek_rush_strength: float = 0.0
    max_degree: int = 150
    activity_sigma: float = 0.8
    closeness_tau_years: float = 3.0
    closeness_gender_bonus: float = 0.15
    closeness_noise: float = 0.1
    outside_friends: float = 150.0

    def __post_init__(self):
        for item in fields(self):
            value = getattr(self, item.name)
            if item.name == "greek_rush_months":
                if any(not 0 <= m < 12 for m in value):
                    raise InfeasibleScenarioError(f"greek_rush_months 必须在 0..11 之间: {value}")
            elif value < 0:
                raise InfeasibleScenarioError(f"机制参数 {item.name} 不能为负: {value}")
        for name in ("same_cohort_share", "triadic_closure", "pre_college_closure", "pre_college_hometown", "greek_rush_strength"):
            if getattr(self, name) > 1:
                raise InfeasibleScenarioError(f"机制参数 {name} 是概率，必须在 [0,1] 内")
        if self.gender_weight + self.major_weight + self.hometown_weight > 1:
            raise InfeasibleScenarioError("同质性权重之和不能超过1")
        if self.max_degree < 1 or self.closeness_tau_years <= 0:
            raise InfeasibleScenarioError("max_degree 与 closeness_tau_years 必须为正")

    def seasonal(self, month_in_year: int) -> float:
        if month_in_year in (0, 1):
            return self.start_of_year
        if month_in_year == 4:
            return self.mid_year
        if month_in_year >= 9:
            return self.summer
        return 1.0

    def rate(self, relative_month: int) -> float:
        """班级相对月份上每名成员的期望新边数"""
        if relative_month < 0:
            return self.pre_college_rate
        if relative_month >= 48:
            return self.post_college_rate
        if relative_month == 0:
            return self.base_rate * self.burst_intensity
        return self.base_rate * self.seasonal(relative_month % 12) * self.yearly_decay**(relative_month // 12)


@dataclass(frozen=True)
class SchoolSpec:
    school_id: str
    covariates: SchoolRecord
    mechanisms: MechanismConfig = field(default_factory=MechanismConfig)
    cohort_size: Optional[int] = None
    female_share: float = 0.5
    n_majors: int = 12
    n_hometowns: int = 25
    local_hometown_share: float = 0.2
    major_unknown_share: float = 0.05


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    schools: Tuple[SchoolSpec, ...]
    entry_years: Tuple[int, ...] = (2011, 2012)
    cohort_size: int = 300
    start_month_day: str = "09-01"
    observe_date: Optional[str] = None

    def __post_init__(self):
        if not self.schools:
            raise InfeasibleScenarioError("场景至少需要一个学校")
        if not self.entry_years:
            raise InfeasibleScenarioError("场景至少需要一个入学年份")
        ids = [s.school_id for s in self.schools]
        if len(set(ids)) != len(ids):
            raise InfeasibleScenarioError(f"学校编号重复: {ids}")
        if self.cohort_size < 2:
            raise InfeasibleScenarioError("cohort_size 至少为2")

    @property
    def n_schools(self) -> int:
        return len(self.schools)

    def size_of(self, school: SchoolSpec) -> int:
        return school.cohort_size or self.cohort_size

    def start_date(self, entry_year: int) -> str:
        return f"{entry_year}-{self.start_month_day}"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SchoolPreset:
    covariates: Dict[str, Any]
    mechanisms: MechanismConfig
    spec: Dict[str, Any] = field(default_factory=dict)


def scenario_presets() -> Dict[str, SchoolPreset]:
    """
    命名预设

    - residential-private: 住宿制私立学校，开学爆发强、三元闭包多
    - commuter-public: 走读公立学校，入学前同乡好友多、闭包少
    - greek-heavy: 兄弟会/姐妹会活跃，招新月份同性别关系集中
    - womens: 女子学校，关系更持久
    - hbcu-like: 传统黑人大学
    """
    residential = MechanismConfig(triadic_closure=0.93, pre_college_hometown=0.4, same_cohort_share=0.7)
    return {
        "residential-private": SchoolPreset(
            covariates={"is_private": True, "greek_rate": 0.15, "grad_rate": 0.85},
            mechanisms=residential,
        ),
        "commuter-public": SchoolPreset(
            covariates={"is_commuter": True, "greek_rate": 0.05, "grad_rate": 0.55},
            mechanisms=replace(residential, base_rate=0.6, burst_intensity=5.0, triadic_closure=0.55, pre_college_rate=0.12, pre_college_hometown=0.85,
                               hometown_weight=0.1, closeness_tau_years=4.0),
            spec={"local_hometown_share": 0.5},
        ),
        "greek-heavy": SchoolPreset(
            covariates={"greek_rate": 0.6, "grad_rate": 0.75},
            mechanisms=replace(residential, greek_rush_strength=0.8, greek_rush_months=(0, 1)),
        ),
        "womens": SchoolPreset(
            covariates={"is_private": True, "is_womens": True, "greek_rate": 0.05, "grad_rate": 0.8},
            mechanisms=replace(residential, closeness_tau_years=3.6),
            spec={"female_share": 1.0},
        ),
        "hbcu-like": SchoolPreset(
            covariates={"is_hbcu": True, "greek_rate": 0.3, "grad_rate": 0.5},
            mechanisms=replace(residential, closeness_tau_years=2.6),
        ),
    }


def school_from_preset(preset_name: str, school_id: str, cohort_size: int, covariates: Optional[Dict[str, Any]] = None, mechanisms: Optional[Dict[str, Any]] = None,
                       **spec: Any) -> SchoolSpec:
    presets = scenario_presets()
    if preset_name not in presets:
        raise InfeasibleScenarioError(f"未知的预设: {preset_name}，可选 {sorted(presets)}")
    preset = presets[preset_name]
    record = SchoolRecord(school_id=school_id, class_size=cohort_size, **{**preset.covariates, **(covariates or {})})
    mechanism = replace(preset.mechanisms, **(mechanisms or {}))
    if "greek_rush_months" in (mechanisms or {}):
        mechanism = replace(mechanism, greek_rush_months=tuple(mechanisms["greek_rush_months"]))
    return SchoolSpec(school_id=school_id, covariates=record, mechanisms=mechanism, **{**preset.spec, **spec})


def preset_scenario(preset_name: str, seed: int = 7, n_schools: int = 1, entry_years: Sequence[int] = (2011, 2012), cohort_size: int = 300,
                    observe_date: Optional[str] = None) -> ScenarioConfig:
    """由单个预设构造 n_schools 个同类学校的场景"""
    schools = tuple(school_from_preset(preset_name, f"{preset_name}-{k + 1}", cohort_size) for k in range(n_schools))
    return ScenarioConfig(seed=seed, schools=schools, entry_years=tuple(entry_years), cohort_size=cohort_size, observe_date=observe_date)


def scenario_from_dict(data: Dict[str, Any]) -> ScenarioConfig:
    """
    解析场景字典

    schools 中每一项为 {preset, count, school_id?, covariates?, mechanisms?}；
    count > 1 时学校编号为 <school_id 或 preset>-<序号>。
    """
    cohort_size = int(data.get("cohort_size", 300))
    schools: List[SchoolSpec] = []
    for item in data.get("schools", []):
        preset_name = item["preset"]
        count = int(item.get("count", 1))
        base_id = item.get("school_id", preset_name)
        for _ in range(count):
            school_id = base_id if count == 1 and "school_id" in item else f"{base_id}-{len(schools) + 1}"
            schools.append(school_from_preset(preset_name, school_id, cohort_size, item.get("covariates"), item.get("mechanisms"), **item.get("spec", {})))
    return ScenarioConfig(
        seed=int(data.get("seed", 7)),
        schools=tuple(schools),
        entry_years=tuple(int(y) for y in data.get("entry_years", (2011, 2012))),
        cohort_size=cohort_size,
        start_month_day=str(data.get("start_month_day", "09-01")),
        observe_date=data.get("observe_date"),
    )


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"场景文件不存在: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            return scenario_from_dict(json.load(f))
    except CohortNetError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise InfeasibleScenarioError(f"场景文件 {path} 无效: {e}") from e
