"""
回归命令 - 由 metrics 输出的同质性与 CFF 结果拟合两个回归设计
"""
import json
from pathlib import Path
from typing import Dict, Optional, Union

import pandas as pd

from ..core.config import Config
from ..core.errors import MissingPrerequisiteError
from ..core.logging import setup_task_logger
from ..graph.attributes import DIMENSIONS
from ..graph.attributes import SchoolCovariates
from ..inference.models import covariate_effects
from ..inference.models import HOMOPHILY_COVARIATES
from ..inference.models import homophily_panel
from ..inference.models import homophily_regression
from ..inference.models import MARGINAL_COLUMNS
from ..inference.models import marginal_estimates
from ..inference.models import PERSISTENCE_COVARIATES
from ..inference.models import persistence_panel
from ..inference.models import persistence_regression
from ..inference.models import usable_covariates
from ..inference.ols import RESULT_COLUMNS
from .runner import write_frame

logger = setup_task_logger(logger_name="Pipeline")

SUMMARY_FILE = "regression_summary.json"


def read_metric(out_dir: Union[str, Path], name: str, command: str) -> pd.DataFrame:
    """读取上游指标文件，缺失时指明需要先运行的命令"""
    path = Path(out_dir) / f"{name}.csv"
    if not path.exists():
        raise MissingPrerequisiteError(f"{path} 不存在，请先运行: {command}")
    try:
        return pd.read_csv(path, encoding="utf-8")
    except pd.errors.EmptyDataError:
        return pd.DataFrame()


def run_regressions(schools: SchoolCovariates, out_dir: Union[str, Path], cov_type: str = "CR1", min_incidences: Optional[int] = None) -> Dict[str, object]:
    """
    拟合同质性模型（每个维度一个）与持续性模型，写出

    - regression_homophily.csv / regression_homophily_marginal.csv
    - regression_persistence.csv / regression_persistence_effects.csv
    - regression_summary.json（无法拟合的模型记录在 failed 中）

    参数:
        schools: 学校协变量
        out_dir: metrics 命令的输出目录，回归结果也写在这里
        cov_type: 协方差类型（CR1 / CR0 / HC1 / classical）
        min_incidences: 同质性观测的最少关联数，默认配置 HOMOPHILY_MIN_INCIDENCES

    返回:
        汇总字典（与 regression_summary.json 相同）
    """
    out_dir = Path(out_dir)
    min_incidences = Config().homophily_min_incidences if min_incidences is None else min_incidences
    summary: Dict[str, object] = {"cov_type": cov_type, "models": {}, "failed": {}}

    homophily = read_metric(out_dir, "homophily", "metrics --metrics homophily")
    coefficients, marginals = [], []
    if not homophily.empty:
        panel = homophily_panel(homophily, schools, mode="new", min_incidences=min_incidences)
        covariates = usable_covariates(panel, HOMOPHILY_COVARIATES)
        for dimension in DIMENSIONS:
            model = f"homophily_{dimension}"
            try:
                results = homophily_regression(panel, covariates=covariates, dimensions=[dimension], cov_type=cov_type)
            except ValueError as e:
                logger.warning(f"{model} 无法拟合: {e}")
                summary["failed"][model] = str(e)
                continue
            for result in results.values():
                coefficients.append(result.to_frame(model))
                marginals.append(marginal_estimates(result, model))
                summary["models"][model] = result.summary()
    write_frame(pd.concat(coefficients, ignore_index=True) if coefficients else pd.DataFrame(columns=RESULT_COLUMNS), out_dir / "regression_homophily.csv")
    write_frame(pd.concat(marginals, ignore_index=True) if marginals else pd.DataFrame(columns=MARGINAL_COLUMNS), out_dir / "regression_homophily_marginal.csv")

    cells = read_metric(out_dir, "persistence", "metrics --metrics persistence")
    effects = pd.DataFrame(columns=RESULT_COLUMNS)
    persistence = pd.DataFrame(columns=RESULT_COLUMNS)
    if not cells.empty:
        panel = persistence_panel(cells, schools)
        covariates = usable_covariates(panel, PERSISTENCE_COVARIATES)
        try:
            result = persistence_regression(panel, covariates=covariates, cov_type=cov_type)
        except ValueError as e:
            logger.warning(f"persistence 无法拟合: {e}")
            summary["failed"]["persistence"] = str(e)
        else:
            persistence = result.to_frame("persistence")
            effects = covariate_effects(result, "persistence", covariates)
            summary["models"]["persistence"] = {**result.summary(), "covariates": list(covariates)}
    write_frame(persistence, out_dir / "regression_persistence.csv")
    write_frame(effects, out_dir / "regression_persistence_effects.csv")

    with (out_dir / SUMMARY_FILE).open("w", encoding="utf-8") as f:
        json.dump(summary, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"回归完成: {sorted(summary['models'])}，未能拟合: {sorted(summary['failed'])}")
    return summary
