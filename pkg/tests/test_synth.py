"""
合成场景：配置校验、可复现性、可行性检查与各预设的形成机制特征
"""
import json

import numpy as np
import pytest

from conftest import small_scenario
from utils.core.errors import InfeasibleScenarioError
from utils.core.errors import MissingInputError
from utils.graph.dataset import load_bundle
from utils.graph.snapshot import Scope
from utils.graph.snapshot import ScopedEvents
from utils.graph.timegrid import TimeGrid
from utils.metrics.formation import edge_volume
from utils.metrics.homophily import homophily_series
from utils.synth.generator import generate
from utils.synth.generator import observe_day_of
from utils.synth.scenario import load_scenario
from utils.synth.scenario import MechanismConfig
from utils.synth.scenario import preset_scenario
from utils.synth.scenario import scenario_from_dict
from utils.synth.scenario import scenario_presets
from utils.synth.writer import write_dataset


def test_mechanism_validation():
    with pytest.raises(ValueError):
        MechanismConfig(base_rate=-1.0)
    with pytest.raises(ValueError):
        MechanismConfig(triadic_closure=1.5)
    with pytest.raises(ValueError):
        MechanismConfig(greek_rush_months=(12, ))
    with pytest.raises(ValueError):
        MechanismConfig(gender_weight=0.5, major_weight=0.4, hometown_weight=0.2)


def test_rate_profile():
    mech = MechanismConfig()
    assert mech.rate(-5) == mech.pre_college_rate
    assert mech.rate(0) == mech.base_rate * mech.burst_intensity
    assert mech.rate(12) == pytest.approx(mech.base_rate * mech.start_of_year * mech.yearly_decay)
    assert mech.rate(10) == pytest.approx(mech.base_rate * mech.summer)
    assert mech.rate(50) == mech.post_college_rate


def test_preset_school_ids():
    config = preset_scenario("womens", n_schools=3, cohort_size=50)
    assert [s.school_id for s in config.schools] == ["womens-1", "womens-2", "womens-3"]
    assert all(s.covariates.is_womens for s in config.schools)
    assert set(scenario_presets()) == {"residential-private", "commuter-public", "greek-heavy", "womens", "hbcu-like"}
    with pytest.raises(ValueError):
        preset_scenario("boarding-school")


def test_scenario_file(tmp_path):
    data = {
        "seed": 3,
        "entry_years": [2010],
        "cohort_size": 80,
        "schools": [{"preset": "greek-heavy", "count": 2, "mechanisms": {"greek_rush_months": [0]}}, {"preset": "womens", "school_id": "wells"}],
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    config = load_scenario(path)
    assert [s.school_id for s in config.schools] == ["greek-heavy-1", "greek-heavy-2", "wells"]
    assert config.schools[0].mechanisms.greek_rush_months == (0, )
    assert config.entry_years == (2010, )
    assert config.to_dict()["schools"][2]["covariates"]["is_womens"] is True
    with pytest.raises(MissingInputError):
        load_scenario(tmp_path / "missing.json")


def test_duplicate_school_ids_rejected():
    with pytest.raises(ValueError):
        scenario_from_dict({"schools": [{"preset": "womens", "school_id": "x"}, {"preset": "hbcu-like", "school_id": "x"}]})


def test_infeasible_density():
    config = preset_scenario("residential-private", entry_years=(2011, ), cohort_size=20)
    with pytest.raises(InfeasibleScenarioError):
        generate(config)


def test_generation_is_reproducible(small_bundle, tmp_path):
    again = generate(small_scenario(), workers=1)
    assert np.array_equal(again.edges.u, small_bundle.edges.u)
    assert np.array_equal(again.edges.v, small_bundle.edges.v)
    assert np.array_equal(again.edges.t, small_bundle.edges.t)
    first = write_dataset(small_bundle, tmp_path / "a")
    second = write_dataset(again, tmp_path / "b")
    for name, path in first.items():
        with open(path, "rb") as a, open(second[name], "rb") as b:
            assert a.read() == b.read(), name


def test_different_seed_changes_network(small_bundle):
    other = generate(small_scenario(seed=12))
    assert len(other.edges) != len(small_bundle.edges) or not np.array_equal(other.edges.t, small_bundle.edges.t)


def test_written_dataset_loads(small_bundle, tmp_path):
    write_dataset(small_bundle, tmp_path)
    loaded = load_bundle(tmp_path)
    assert len(loaded.edges) == len(small_bundle.edges)
    assert loaded.attributes.cohorts() == small_bundle.attributes.cohorts()
    assert len(loaded.closeness) == len(small_bundle.closeness)
    assert loaded.schools["alpha"].is_private


def test_edges_stay_inside_schools_and_window(small_bundle):
    attrs = small_bundle.attributes
    edges = small_bundle.edges
    assert np.array_equal(attrs.school[edges.u], attrs.school[edges.v])
    assert edges.t.max() < observe_day_of(small_scenario())


def test_degree_cap(residential):
    edges = residential.edges
    degree = np.bincount(np.concatenate([edges.u, edges.v]), minlength=residential.attributes.node_count)
    assert degree.max() <= 150


def test_closeness_ranks_are_unique_per_ego(small_bundle):
    frame = small_bundle.closeness.to_frame(small_bundle.attributes.node_ids)
    assert not frame.duplicated(["ego_id", "rank"]).any()
    assert frame["rank"].min() >= 1


def _grid(bundle):
    attrs = bundle.attributes
    return TimeGrid.for_cohort(attrs, attrs.cohorts()[0])


def test_volume_accounts_for_every_edge(residential):
    series = edge_volume(residential.edges, residential.attributes, _grid(residential))
    assert int(np.nansum(series.value)) == len(residential.edges)


def test_start_of_college_burst(residential):
    series = edge_volume(residential.edges, residential.attributes, _grid(residential))
    assert int(series.idx[np.nanargmax(series.value)]) == 0
    assert series.value_at(0) >= 5 * np.nanmedian(series.value)


def test_rush_months_raise_gender_homophily(greek):
    series = homophily_series(greek.edges, greek.attributes, _grid(greek), "gender")
    rush = np.mean([series.value_at(m) for m in (0, 1, 12, 13)])
    quiet = np.mean([series.value_at(m) for m in (2, 3, 14, 15)])
    assert rush > quiet


def test_commuters_arrive_with_hometown_friends(residential, commuter):

    def hometown_h(bundle):
        return homophily_series(bundle.edges, bundle.attributes, _grid(bundle), "hometown", mode="cumulative").value_at(-1)

    assert hometown_h(commuter) > hometown_h(residential)


def test_pre_college_edges_are_sparse(residential):
    grid = _grid(residential)
    scoped = ScopedEvents.build(residential.edges, residential.attributes, grid, Scope.COHORT)
    before = scoped.view_upto(-1)
    assert before.edge_count < 0.1 * len(residential.edges)
