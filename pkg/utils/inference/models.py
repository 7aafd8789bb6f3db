"""
两个回归设计

- 同质性模型：每个 (班级, 月份) 一行，因变量为新边同质性 H，
  自变量为月份固定效应与“月份 × 学校协变量”交互项
- 持续性模型：每个入学班级一行，因变量为 CFF 占比，
  自变量为学校协变量与入学年份固定效应

两者默认都按学校聚类（CR1）。
"""
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from ..core.logging import setup_logger
from ..graph.attributes import CohortKey
from ..graph.attributes import DIMENSIONS
from ..graph.attributes import SchoolCovariates
from .design import build_design
from .ols import ols_fit
from .ols import RegressionResult

logger = setup_logger(logger_name="Inference", log_level="INFO")

HOMOPHILY_COVARIATES = ("is_private", "is_hbcu", "is_womens", "is_religious", "is_commuter", "greek_rate")
PERSISTENCE_COVARIATES = ("is_private", "is_hbcu", "is_womens", "is_religious", "is_commuter", "greek_rate", "grad_rate")
MARGINAL_COLUMNS = ["model", "covariate", "idx", "estimate", "se", "ci_low", "ci_high"]


def usable_covariates(frame: pd.DataFrame, covariates: Sequence[str]) -> List[str]:
    """去掉在样本中没有变化的协变量"""
    kept = []
    for name in covariates:
        if name in frame and frame[name].nunique(dropna=True) > 1:
            kept.append(name)
        else:
            logger.warning(f"协变量 {name} 在样本中没有变化，已从模型中去掉")
    return kept


def attach_school_covariates(frame: pd.DataFrame, schools: SchoolCovariates) -> pd.DataFrame:
    """按 cohort 标签中的学校合并协变量（布尔标志已是 0/1）"""
    covariates = schools.to_frame()
    frame = frame.copy()
    frame["school_id"] = [CohortKey.parse(label).school_id for label in frame["cohort"]]
    frame["entry_year"] = [CohortKey.parse(label).entry_year for label in frame["cohort"]]
    return frame.merge(covariates, on="school_id", how="inner", sort=False)


def homophily_panel(homophily: pd.DataFrame, schools: SchoolCovariates, mode: str = "new", min_incidences: int = 0) -> pd.DataFrame:
    """由同质性长表构造回归面板：只保留 H 存在且关联数达到阈值的 (班级, 月份)"""
    panel = homophily[(homophily["mode"] == mode) & homophily["H"].notna() & (homophily["n_incidences"] >= min_incidences)]
    return attach_school_covariates(panel, schools)


def homophily_regression(panel: pd.DataFrame, covariates: Sequence[str] = HOMOPHILY_COVARIATES, dimensions: Sequence[str] = DIMENSIONS, cov_type: str = "CR1",
                         response: str = "H") -> Dict[str, RegressionResult]:
    """
    每个维度一个模型：H ~ 截距 + 月份固定效应 + Σ_c 月份 × c

    参数:
        panel: 列 dimension, idx, school_id, H 与各协变量
        covariates: 学校协变量列

    返回:
        {维度: RegressionResult}，面板中没有数据的维度被跳过
    """
    results: Dict[str, RegressionResult] = {}
    for dimension in dimensions:
        rows = panel[panel["dimension"] == dimension].sort_values(["school_id", "cohort", "idx"], kind="mergesort")
        if rows.empty:
            logger.info(f"维度 {dimension} 没有可用观测，跳过")
            continue
        design = build_design(rows, fixed_effects=["idx"], interactions=[("idx", c) for c in covariates], cluster="school_id")
        results[dimension] = ols_fit(design, rows[response].to_numpy(dtype=float), cov_type=cov_type)
        logger.info(f"同质性模型 {dimension}: n={design.n_obs}, k={design.n_columns}, R²={results[dimension].r2:.3f}")
    return results


def marginal_estimates(result: RegressionResult, model: str) -> pd.DataFrame:
    """
    交互项按 (协变量, 月份) 展开，用于绘制每月的协变量效应

    返回:
        model,covariate,idx,estimate,se,ci_low,ci_high
    """
    rows = []
    for pos, name in enumerate(result.columns):
        if name not in result.terms:
            continue
        _, level, covariate = result.terms[name]
        rows.append([model, covariate, int(float(level)), result.coefficients[pos], result.se[pos], result.ci_low[pos], result.ci_high[pos]])
    frame = pd.DataFrame(rows, columns=MARGINAL_COLUMNS)
    return frame.sort_values(["covariate", "idx"], kind="mergesort").reset_index(drop=True)


def persistence_panel(cells: pd.DataFrame, schools: SchoolCovariates) -> pd.DataFrame:
    """由 cohort 分组的 CFF 结果（grouping,key,share_cff,n_ties）构造每个入学班级一行的面板"""
    rows = cells[(cells["grouping"] == "cohort") & cells["share_cff"].notna()].rename(columns={"key": "cohort"})
    return attach_school_covariates(rows, schools)


def persistence_regression(panel: pd.DataFrame, covariates: Sequence[str] = PERSISTENCE_COVARIATES, year_column: str = "entry_year", cluster: str = "school_id",
                           cov_type: str = "CR1", response: str = "share_cff") -> RegressionResult:
    """share_cff ~ 截距 + 协变量 + 入学年份固定效应，按学校聚类"""
    rows = panel.sort_values([cluster, year_column], kind="mergesort")
    design = build_design(rows, covariates=covariates, fixed_effects=[year_column], cluster=cluster)
    result = ols_fit(design, rows[response].to_numpy(dtype=float), cov_type=cov_type)
    logger.info(f"持续性模型: n={result.n_obs}, 聚类={result.n_clusters}, R²={result.r2:.3f}")
    return result


def covariate_effects(result: RegressionResult, model: str, covariates: Sequence[str]) -> pd.DataFrame:
    """只保留协变量系数（不含截距与固定效应），对应持续性系数图"""
    frame = result.to_frame(model)
    return frame[np.isin(frame["term"], list(covariates))].reset_index(drop=True)
