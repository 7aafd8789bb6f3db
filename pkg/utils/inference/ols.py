"""
最小二乘与协方差估计

拟合与协方差由 statsmodels 完成：classical 对应 nonrobust，HC1 对应 HC1，
CR1/CR0 对应 cluster（use_correction 为真时乘 G/(G−1)·(n−1)/(n−k)）。
带列主元的 QR 分解只用于在拟合前检查秩并指出共线的列。
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd
from scipy import linalg
import statsmodels.api as sm
from statsmodels.stats import sandwich_covariance

from ..core.errors import RankDeficiencyError
from ..core.logging import setup_logger
from .design import DesignMatrix

logger = setup_logger(logger_name="Inference", log_level="INFO")

COV_TYPES = ("CR1", "CR0", "HC1", "classical")
CI_Z = 1.96
RESULT_COLUMNS = ["model", "term", "estimate", "se", "ci_low", "ci_high"]


@dataclass(frozen=True, eq=False)
class RegressionResult:
    columns: List[str]
    coefficients: np.ndarray
    se: np.ndarray
    r2: float
    n_obs: int
    n_clusters: Optional[int]
    cov_type: str
    residuals: np.ndarray
    terms: Dict[str, tuple]

    @property
    def ci_low(self) -> np.ndarray:
        return self.coefficients - CI_Z * self.se

    @property
    def ci_high(self) -> np.ndarray:
        return self.coefficients + CI_Z * self.se

    def coef(self, term: str) -> float:
        return float(self.coefficients[self.columns.index(term)])

    def stderr(self, term: str) -> float:
        return float(self.se[self.columns.index(term)])

    def to_frame(self, model: str) -> pd.DataFrame:
        """model,term,estimate,se,ci_low,ci_high"""
        return pd.DataFrame({
            "model": model,
            "term": self.columns,
            "estimate": self.coefficients,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }, columns=RESULT_COLUMNS)

    def summary(self) -> Dict[str, object]:
        return {"r2": self.r2, "n_obs": self.n_obs, "n_clusters": self.n_clusters, "cov_type": self.cov_type}


def _matrix(X: Union[DesignMatrix, np.ndarray]) -> np.ndarray:
    return X.X if isinstance(X, DesignMatrix) else np.asarray(X, dtype=float)


def _names(X: Union[DesignMatrix, np.ndarray]) -> List[str]:
    return list(X.columns) if isinstance(X, DesignMatrix) else [f"x{k}" for k in range(np.asarray(X).shape[1])]


def _cluster_codes(clusters: np.ndarray) -> np.ndarray:
    codes, _ = pd.factorize(pd.Series(np.asarray(clusters)), sort=True)
    groups = int(codes.max()) + 1 if len(codes) else 0
    if groups < 2:
        raise ValueError(f"聚类稳健标准误至少需要2个聚类，当前为 {groups}")
    return codes.astype(np.int64)


def check_rank(matrix: np.ndarray, names: List[str]) -> None:
    """
    检查设计矩阵是否列满秩

    异常:
        RankDeficiencyError: 观测数不足，或列主元 QR 分解中排在秩之后的列与其他列共线
    """
    n, k = matrix.shape
    if n <= k:
        raise RankDeficiencyError(f"观测数 {n} 必须大于列数 {k}", columns=names)
    _, R, pivot = linalg.qr(matrix, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(n, k) * np.finfo(float).eps if k else 0.0
    rank = int(np.sum(diag > tol))
    if rank < k:
        collinear = [names[p] for p in pivot[rank:]]
        raise RankDeficiencyError(f"设计矩阵不满秩（秩 {rank} < {k} 列），共线列: {collinear}", columns=collinear)


def cluster_robust_se(X: Union[DesignMatrix, np.ndarray], residuals: np.ndarray, clusters: np.ndarray, kind: str = "CR1") -> np.ndarray:
    """
    由残差计算 Liang-Zeger 聚类稳健标准误

    参数:
        kind: CR1（乘 G/(G−1)·(n−1)/(n−k)）或 CR0（不修正）

    返回:
        每个系数的标准误
    """
    if kind not in ("CR1", "CR0"):
        raise ValueError(f"未知的聚类修正: {kind}")
    matrix = _matrix(X)
    codes = _cluster_codes(clusters)
    scores = matrix * np.asarray(residuals, dtype=float)[:, None]
    bread = np.linalg.inv(matrix.T @ matrix)
    cov = sandwich_covariance.cov_cluster((scores, bread), codes, use_correction=kind == "CR1")
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


def _fit_kwargs(cov_type: str, codes: Optional[np.ndarray]) -> Dict[str, object]:
    if cov_type == "classical":
        return {"cov_type": "nonrobust"}
    if cov_type == "HC1":
        return {"cov_type": "HC1"}
    return {"cov_type": "cluster", "cov_kwds": {"groups": codes, "use_correction": cov_type == "CR1"}}


def ols_fit(X: Union[DesignMatrix, np.ndarray], y: np.ndarray, cov_type: str = "CR1", clusters: Optional[np.ndarray] = None) -> RegressionResult:
    """
    最小二乘拟合

    参数:
        X: 设计矩阵；为 DesignMatrix 时默认使用其中的聚类
        y: 因变量
        cov_type: CR1 | CR0 | HC1 | classical；没有聚类时 CR1/CR0 退化为 HC1

    返回:
        RegressionResult，R² 按去均值的总平方和计算，因变量为常数时为 1

    异常:
        RankDeficiencyError: 设计矩阵不满秩，列出与其他列共线的列名
    """
    if cov_type not in COV_TYPES:
        raise ValueError(f"未知的协方差类型: {cov_type}，可选 {COV_TYPES}")
    matrix = _matrix(X)
    names = _names(X)
    y = np.asarray(y, dtype=float)
    n, k = matrix.shape
    check_rank(matrix, names)

    if clusters is None and isinstance(X, DesignMatrix):
        clusters = X.clusters
    codes, n_clusters = None, None
    if cov_type in ("CR1", "CR0"):
        if clusters is None:
            logger.warning(f"未提供聚类，{cov_type} 退化为 HC1")
            cov_type = "HC1"
        else:
            codes = _cluster_codes(clusters)
            n_clusters = int(codes.max()) + 1

    fitted = sm.OLS(y, matrix).fit(**_fit_kwargs(cov_type, codes))
    beta = np.asarray(fitted.params, dtype=float)
    residuals = np.asarray(fitted.resid, dtype=float)
    se = np.sqrt(np.clip(np.diag(np.asarray(fitted.cov_params(), dtype=float)), 0.0, None))
    ssr = float(residuals @ residuals)
    sst = float(np.sum((y - y.mean())**2))
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0

    terms = dict(X.terms) if isinstance(X, DesignMatrix) else {}
    logger.debug(f"OLS 拟合完成: n={n}, k={k}, R²={r2:.4f}, 协方差={cov_type}")
    return RegressionResult(names, beta, se, r2, n, n_clusters, cov_type, residuals, terms)
