"""
设计矩阵、OLS 与稳健标准误、两个回归模型在合成面板上的效应恢复
"""
import numpy as np
import pandas as pd
import pytest

from utils.core.errors import RankDeficiencyError
from utils.inference.design import build_design
from utils.inference.design import INTERCEPT
from utils.inference.models import covariate_effects
from utils.inference.models import homophily_regression
from utils.inference.models import MARGINAL_COLUMNS
from utils.inference.models import marginal_estimates
from utils.inference.models import persistence_regression
from utils.inference.ols import cluster_robust_se
from utils.inference.ols import ols_fit
from utils.inference.ols import RESULT_COLUMNS
from utils.synth.panels import generate_homophily_panel
from utils.synth.panels import generate_persistence_panel
from utils.synth.panels import PANEL_FLAGS
from utils.synth.panels import RUSH_MONTHS


def linear_data(rng, n=200):
    X = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n)])
    y = X @ np.array([1.0, 2.0, -0.5]) + rng.normal(size=n)
    return X, y


def test_design_columns():
    frame = pd.DataFrame({"idx": [0, 1, 2, 0, 1, 2], "greek_rate": [0.1, 0.1, 0.1, 0.3, 0.3, 0.3], "entry_year": [2006, 2007, 2007, 2006, 2006, 2007],
                          "school_id": ["a", "a", "a", "b", "b", "b"]})
    design = build_design(frame, covariates=["greek_rate"], fixed_effects=["entry_year"], interactions=[("idx", "greek_rate")], cluster="school_id")
    assert design.columns == [INTERCEPT, "greek_rate", "entry_year[2007]", "idx[0]:greek_rate", "idx[1]:greek_rate", "idx[2]:greek_rate"]
    assert design.column("entry_year[2007]").tolist() == [0, 1, 1, 0, 0, 1]
    assert design.column("idx[1]:greek_rate").tolist() == pytest.approx([0, 0.1, 0, 0, 0.3, 0])
    assert design.clusters.tolist() == [0, 0, 0, 1, 1, 1]
    assert design.terms["idx[2]:greek_rate"] == ("idx", "2", "greek_rate")


def test_design_rejects_missing_cluster():
    frame = pd.DataFrame({"x": [1.0, 2.0], "school_id": ["a", None]})
    with pytest.raises(ValueError):
        build_design(frame, covariates=["x"], cluster="school_id")


def test_recovers_planted_coefficients():
    rng = np.random.default_rng(0)
    X, y = linear_data(rng, n=10_000)
    result = ols_fit(X, y, cov_type="HC1")
    for true, estimate, se in zip([1.0, 2.0, -0.5], result.coefficients, result.se):
        assert abs(estimate - true) < 3 * se


def test_exact_fit_has_unit_r2():
    rng = np.random.default_rng(1)
    X = np.column_stack([np.ones(50), rng.normal(size=50)])
    result = ols_fit(X, X @ np.array([3.0, -1.0]), cov_type="classical")
    assert result.r2 == pytest.approx(1.0)
    assert np.allclose(result.residuals, 0.0, atol=1e-10)


def test_constant_response():
    X = np.ones((10, 1))
    result = ols_fit(X, np.ones(10), cov_type="HC1")
    assert result.coefficients == pytest.approx([1.0])
    assert result.r2 == 1.0


def test_rank_deficiency_names_columns():
    rng = np.random.default_rng(2)
    x = rng.normal(size=30)
    frame = pd.DataFrame({"a": x, "b": 2 * x, "c": rng.normal(size=30)})
    design = build_design(frame, covariates=["a", "b", "c"])
    with pytest.raises(RankDeficiencyError) as info:
        ols_fit(design, rng.normal(size=30), cov_type="HC1")
    assert set(info.value.columns) & {"a", "b"}


def test_too_few_observations():
    with pytest.raises(RankDeficiencyError):
        ols_fit(np.ones((2, 3)), np.ones(2), cov_type="HC1")


def test_unknown_cov_type():
    rng = np.random.default_rng(3)
    X, y = linear_data(rng)
    with pytest.raises(ValueError):
        ols_fit(X, y, cov_type="HC3")


def test_duplicated_data_keeps_coefficients():
    rng = np.random.default_rng(4)
    X, y = linear_data(rng)
    once = ols_fit(X, y, cov_type="HC1")
    twice = ols_fit(np.vstack([X, X]), np.concatenate([y, y]), cov_type="HC1")
    assert twice.coefficients == pytest.approx(once.coefficients)


def test_nested_models_do_not_lose_r2():
    rng = np.random.default_rng(5)
    X, y = linear_data(rng)
    assert ols_fit(X, y, "HC1").r2 >= ols_fit(X[:, :2], y, "HC1").r2


def test_affine_rescaling():
    rng = np.random.default_rng(6)
    X, y = linear_data(rng)
    base = ols_fit(X, y, "HC1")
    scaled = X.copy()
    scaled[:, 1] = 10.0 * X[:, 1] + 3.0
    result = ols_fit(scaled, y, "HC1")
    assert result.coefficients[1] == pytest.approx(base.coefficients[1] / 10.0)
    assert result.r2 == pytest.approx(base.r2)


def test_cluster_sandwich_matches_direct_sum():
    rng = np.random.default_rng(7)
    X, y = linear_data(rng)
    clusters = rng.integers(0, 20, len(y))
    residuals = ols_fit(X, y, "HC1").residuals
    bread = np.linalg.inv(X.T @ X)
    meat = np.zeros((3, 3))
    for g in np.unique(clusters):
        s = X[clusters == g].T @ residuals[clusters == g]
        meat += np.outer(s, s)
    n, k, groups = len(y), 3, len(np.unique(clusters))
    cr0 = np.sqrt(np.diag(bread @ meat @ bread))
    cr1 = cr0 * np.sqrt(groups / (groups - 1) * (n - 1) / (n - k))
    assert cluster_robust_se(X, residuals, clusters, "CR0") == pytest.approx(cr0, rel=1e-9)
    assert cluster_robust_se(X, residuals, clusters, "CR1") == pytest.approx(cr1, rel=1e-9)
    fitted = ols_fit(X, y, "CR1", clusters=clusters)
    assert fitted.se == pytest.approx(cr1, rel=1e-9)
    assert fitted.n_clusters == groups
    assert ols_fit(X, y, "CR0", clusters=clusters).se == pytest.approx(cr0, rel=1e-9)


def test_singleton_clusters_equal_hc1():
    rng = np.random.default_rng(8)
    X, y = linear_data(rng)
    hc1 = ols_fit(X, y, "HC1")
    scores = X * hc1.residuals[:, None]
    bread = np.linalg.inv(X.T @ X)
    direct = np.sqrt(np.diag(bread @ (scores.T @ scores) @ bread) * len(y) / (len(y) - 3))
    assert hc1.se == pytest.approx(direct, rel=1e-9)
    assert ols_fit(X, y, "CR1", clusters=np.arange(len(y))).se == pytest.approx(hc1.se, rel=1e-9)


def test_missing_clusters_fall_back_to_hc1():
    rng = np.random.default_rng(12)
    X, y = linear_data(rng)
    result = ols_fit(X, y, "CR1")
    assert result.cov_type == "HC1"
    assert result.n_clusters is None
    assert result.se == pytest.approx(ols_fit(X, y, "HC1").se)


def test_single_cluster_is_rejected():
    rng = np.random.default_rng(9)
    X, y = linear_data(rng)
    with pytest.raises(ValueError):
        cluster_robust_se(X, y, np.zeros(len(y)), "CR1")
    with pytest.raises(ValueError):
        ols_fit(X, y, "CR1", clusters=np.zeros(len(y)))


def test_classical_se():
    rng = np.random.default_rng(10)
    X, y = linear_data(rng)
    result = ols_fit(X, y, "classical")
    sigma2 = result.residuals @ result.residuals / (len(y) - 3)
    assert result.se == pytest.approx(np.sqrt(np.diag(np.linalg.inv(X.T @ X)) * sigma2), rel=1e-9)


def test_clustered_se_tracks_classical_without_cluster_effect():
    ratios = []
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        X, y = linear_data(rng, n=2000)
        clusters = rng.integers(0, 50, len(y))
        clustered = ols_fit(X, y, "CR1", clusters=clusters)
        classical = ols_fit(X, y, "classical")
        ratios.append(clustered.se / classical.se)
    mean_ratio = np.mean(ratios, axis=0)
    assert np.all(np.abs(mean_ratio - 1.0) < 0.2)


def test_result_frame():
    rng = np.random.default_rng(11)
    X, y = linear_data(rng)
    frame = ols_fit(X, y, "HC1").to_frame("demo")
    assert list(frame.columns) == RESULT_COLUMNS
    assert (frame["ci_low"] < frame["estimate"]).all()
    assert (frame["estimate"] < frame["ci_high"]).all()


def test_persistence_model_recovers_womens_effect():
    panel = generate_persistence_panel(seed=3)
    covariates = [*PANEL_FLAGS, "greek_rate", "grad_rate"]
    result = persistence_regression(panel, covariates=covariates)
    assert result.cov_type == "CR1"
    assert result.n_obs == 7586
    assert abs(result.coef("is_womens") - 0.03) < 3 * result.stderr("is_womens")
    assert result.coef("is_womens") - 1.96 * result.stderr("is_womens") > 0
    assert abs(result.coef("placebo")) < 3 * result.stderr("placebo")
    effects = covariate_effects(result, "persistence", covariates)
    assert effects["term"].tolist() == covariates


def test_homophily_model_finds_rush_months():
    panel = generate_homophily_panel(n_schools=200, seed=1)
    results = homophily_regression(panel, covariates=["greek_rate", "placebo"], dimensions=["gender", "major"])
    assert list(results) == ["gender"]
    marginal = marginal_estimates(results["gender"], "homophily_gender")
    assert list(marginal.columns) == MARGINAL_COLUMNS
    greek = marginal[marginal["covariate"] == "greek_rate"].set_index("idx")
    assert len(greek) == 72
    for month in RUSH_MONTHS:
        assert greek.loc[month, "estimate"] > 0.15
        assert greek.loc[month, "ci_low"] > 0
    quiet = greek.drop(index=list(RUSH_MONTHS))
    assert abs(quiet["estimate"].mean()) < 0.05


def test_placebo_intervals_cover_zero():
    covered, total = 0, 0
    for seed in range(3):
        panel = generate_homophily_panel(n_schools=200, seed=seed)
        result = homophily_regression(panel, covariates=["greek_rate", "placebo"], dimensions=["gender"])["gender"]
        placebo = marginal_estimates(result, "m")
        placebo = placebo[placebo["covariate"] == "placebo"]
        covered += int(((placebo["ci_low"] <= 0) & (placebo["ci_high"] >= 0)).sum())
        total += len(placebo)
    assert covered >= 0.9 * total


def test_identical_schools_are_rank_deficient():
    panel = generate_homophily_panel(n_schools=30, seed=2)
    panel["greek_rate"] = 0.2
    with pytest.raises(RankDeficiencyError):
        homophily_regression(panel, covariates=["greek_rate"], dimensions=["gender"])
