"""
测试公共夹具

- 手工构造的小数据集（两个学校、三个班级），用于精确值检查
- 小规模合成场景（会话级缓存），用于方向性检查
"""
# pylint: disable=wrong-import-position,redefined-outer-name
import os
from pathlib import Path
import tempfile

os.environ.setdefault("LOG_DIR", str(Path(tempfile.gettempdir()) / "cohortnet-test-log"))
os.environ.setdefault("PIPELINE_WORKERS", "2")

import numpy as np
import pandas as pd
import pytest
from scipy import sparse

from utils.graph.attributes import AttributeTable
from utils.graph.attributes import CohortKey
from utils.graph.attributes import SchoolCovariates
from utils.graph.attributes import SchoolRecord
from utils.graph.closeness import ClosenessTable
from utils.graph.dataset import DatasetBundle
from utils.graph.snapshot import Scope
from utils.graph.snapshot import SnapshotView
from utils.graph.temporal import TemporalEdgeList
from utils.synth.generator import generate
from utils.synth.scenario import preset_scenario
from utils.synth.scenario import ScenarioConfig
from utils.synth.scenario import school_from_preset


def day(text: str) -> int:
    return int(np.datetime64(text, "D").astype(np.int64))


def attribute_table(rows, starts=None) -> AttributeTable:
    """rows: (node_id, school_id, entry_year, gender, major, hometown)；开学日默认为当年 9 月 1 日"""
    frame = pd.DataFrame(rows, columns=["node_id", "school_id", "entry_year", "gender", "major", "hometown"])
    pairs = sorted({(s, int(y)) for s, y in zip(frame["school_id"], frame["entry_year"])})
    starts = starts or {}
    cohorts = pd.DataFrame([{"school_id": s, "entry_year": y, "start_date": day(starts.get((s, y), f"{y}-09-01"))} for s, y in pairs])
    return AttributeTable.from_frames(frame, cohorts)


def edge_list(attrs: AttributeTable, triples) -> TemporalEdgeList:
    """triples: (src_id, dst_id, ISO 日期)"""
    index = {name: k for k, name in enumerate(attrs.node_ids.tolist())}
    u = [index[a] for a, _, _ in triples]
    v = [index[b] for _, b, _ in triples]
    t = [day(d) for _, _, d in triples]
    return TemporalEdgeList.from_arrays(u, v, t, id_map=attrs.node_ids)


def graph_view(n: int, pairs, idx: int = 0) -> SnapshotView:
    """由无向边列表构造一个 n 个节点的快照视图"""
    pairs = sorted({(min(a, b), max(a, b)) for a, b in pairs if a != b})
    rows = [a for a, b in pairs] + [b for a, b in pairs]
    cols = [b for a, b in pairs] + [a for a, b in pairs]
    adjacency = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    adjacency.sort_indices()
    return SnapshotView(CohortKey("test", 2011), Scope.COHORT, idx, np.arange(n), adjacency, len(pairs))


def random_pairs(rng: np.random.Generator, n: int, p: float):
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return list(zip(*np.nonzero(upper)))


TOY_ROWS = [
    ("n1", "north", 2011, "F", "math", "town-a"),
    ("n2", "north", 2011, "F", "math", "town-b"),
    ("n3", "north", 2011, "M", "art", "town-a"),
    ("n4", "north", 2011, "M", "unknown", "town-c"),
    ("n5", "north", 2012, "F", "art", "town-a"),
    ("n6", "north", 2012, "M", "math", "town-b"),
    ("n7", "north", 2012, "F", "art", "town-c"),
    ("s1", "south", 2011, "F", "bio", "town-d"),
    ("s2", "south", 2011, "M", "bio", "town-d"),
    ("s3", "south", 2011, "F", "chem", "town-e"),
]

TOY_EDGES = [
    ("n1", "n2", "2011-03-10"),
    ("n1", "n3", "2011-09-02"),
    ("n2", "n3", "2011-09-05"),
    ("n3", "n4", "2011-09-20"),
    ("n1", "n4", "2011-10-03"),
    ("n1", "n5", "2012-09-03"),
    ("n3", "n6", "2012-09-10"),
    ("n5", "n6", "2012-09-11"),
    ("n6", "n7", "2013-02-14"),
    ("n2", "n4", "2014-05-01"),
    ("s1", "s2", "2011-08-15"),
    ("s2", "s3", "2011-09-01"),
    ("s1", "s3", "2011-11-11"),
]


def toy_bundle() -> DatasetBundle:
    attrs = attribute_table(TOY_ROWS)
    edges = edge_list(attrs, TOY_EDGES)
    schools = SchoolCovariates([
        SchoolRecord("north", is_private=True, greek_rate=0.2, grad_rate=0.8, class_size=4),
        SchoolRecord("south", is_commuter=True, greek_rate=0.05, grad_rate=0.5, class_size=3),
    ])
    # 每个 ego 的好友按字典序排名，n1 把 n5 排在第 3 位
    index = {name: k for k, name in enumerate(attrs.node_ids.tolist())}
    friends = {}
    for a, b, _ in TOY_EDGES:
        friends.setdefault(a, []).append(b)
        friends.setdefault(b, []).append(a)
    ego, alter, rank = [], [], []
    for name, others in friends.items():
        for position, other in enumerate(sorted(others), start=1):
            ego.append(index[name])
            alter.append(index[other])
            rank.append(position)
    closeness = ClosenessTable(np.array(ego), np.array(alter), np.array(rank))
    return DatasetBundle(edges=edges, attributes=attrs, schools=schools, closeness=closeness)


@pytest.fixture
def toy():
    return toy_bundle()


@pytest.fixture
def toy_dir(tmp_path, toy):
    from utils.synth.writer import write_dataset

    data_dir = tmp_path / "data"
    write_dataset(toy, data_dir)
    return data_dir


def small_scenario(seed: int = 11) -> ScenarioConfig:
    """两个低速率的小学校、两个入学年份，整条流水线可在几秒内完成"""
    schools = (
        school_from_preset("residential-private", "alpha", 60, mechanisms={"base_rate": 0.2}),
        school_from_preset("commuter-public", "beta", 60, mechanisms={"base_rate": 0.2}),
    )
    return ScenarioConfig(seed=seed, schools=schools, entry_years=(2011, 2012), cohort_size=60)


@pytest.fixture(scope="session")
def small_bundle():
    return generate(small_scenario())


@pytest.fixture(scope="session")
def residential():
    """单个住宿制学校、单个入学年份"""
    return generate(preset_scenario("residential-private", seed=7, entry_years=(2011, ), cohort_size=200))


@pytest.fixture(scope="session")
def commuter():
    return generate(preset_scenario("commuter-public", seed=7, entry_years=(2011, ), cohort_size=200))


@pytest.fixture(scope="session")
def greek():
    return generate(preset_scenario("greek-heavy", seed=7, entry_years=(2011, ), cohort_size=200))


@pytest.fixture(scope="session")
def two_year():
    """两个入学年份的住宿制学校，用于亲密度随关系年龄变化的检查"""
    return generate(preset_scenario("residential-private", seed=5, entry_years=(2011, 2012), cohort_size=120))
