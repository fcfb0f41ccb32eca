import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planted import expected_ideal_precision, planted_dataset
from socialcf.clustering import ClusteringConfig, Mode
from socialcf.dataset import Dataset, Rating, RatingsMatrix, SocialEdge, SocialGraph
from socialcf.errors import InvalidConfig, NotEvaluable
from socialcf.evaluation import SplitConfig, evaluate, precision_at_n, recall_at_n, split


def matrix(rows):
    return RatingsMatrix(Rating(u, i, v) for u, row in rows.items() for i, v in row.items())


@pytest.fixture
def small():
    m = matrix({
        "a": {"x": 1.0, "y": 2.0, "z": 3.0, "w": 4.0},
        "b": {"x": 5.0},
        "c": {"x": 2.0, "y": 2.0, "z": 5.0},
    })
    g = SocialGraph(frozenset({SocialEdge("a", "b", "friend")}))
    return Dataset(m, g, frozenset({"ghost"}))


def test_split_deterministic(small):
    cfg = SplitConfig(0.5, seed=3)
    assert split(small, cfg) == split(small, cfg)


def test_split_counts(small):
    train, test = split(small, SplitConfig(0.5, seed=1))
    held = {}
    for r in test:
        held[r.user] = held.get(r.user, 0) + 1
    assert held["a"] == 2
    assert "b" not in held
    assert held["c"] == 2
    assert train.ratings.row("b") == {"x": 5.0}
    assert train.graph == small.graph
    assert train.all_users == small.all_users
    assert len(train.ratings) + len(test) == len(small.ratings)


@pytest.mark.parametrize("seed", range(5))
def test_global_split_retains(small, seed):
    train, test = split(small, SplitConfig(0.9, seed=seed, per_user=False))
    for u in small.ratings.users:
        assert len(train.ratings.row(u)) >= 1
    assert len(test) == 5


@pytest.mark.parametrize("f", [0.0, 1.0, -0.1, 1.5])
def test_split_config_range(f):
    with pytest.raises(InvalidConfig):
        SplitConfig(f)


def test_precision_recall():
    rec = ["a", "b", "c", "d", "e"]
    assert precision_at_n(rec, {"b", "d"}, 5) == 0.4
    assert precision_at_n(rec, {"z"}, 5) == 0.0
    assert precision_at_n(rec, set(rec), 5) == 1.0
    assert precision_at_n(rec[:2], {"a"}, 4) == 0.25
    assert recall_at_n(rec, {"a", "b", "y", "z"}, 5) == 0.5
    assert recall_at_n(rec, {"a", "e"}, 5) == 1.0
    assert recall_at_n(rec, {"a", "e"}, 2) == 0.5
    with pytest.raises(NotEvaluable):
        recall_at_n(rec, set(), 5)


def test_threshold_above_max(small):
    rep = evaluate(small, ClusteringConfig(1), 10, 100.0, SplitConfig(0.5))
    assert rep.no_evaluable_users
    assert rep.macro_precision is None and rep.macro_recall is None
    assert rep.as_dict()["no_evaluable_users"] is True


def test_evaluate_deterministic(small):
    a = evaluate(small, ClusteringConfig(2), 3, 2.0, SplitConfig(0.5, seed=4))
    b = evaluate(small, ClusteringConfig(2), 3, 2.0, SplitConfig(0.5, seed=4))
    assert a == b
    assert a.as_dict() == b.as_dict()


def test_planted_friend_retrieval():
    ds, _ = planted_dataset(friends=True)
    rep = evaluate(ds, ClusteringConfig(2), 10, 4.0, SplitConfig(0.2, seed=0))
    # friends link same-parity ids, i.e. members of the same community
    assert rep.friend_retrieval_users == 20
    assert 0.0 <= rep.friend_retrieval <= 1.0


def test_oracle_enumeration_small():
    # one user with ratings (5, 5, 1), 1 of 3 held out: relevant in 2 of 3 subsets
    m = matrix({"a": {"x": 5.0, "y": 5.0, "z": 1.0}})
    assert expected_ideal_precision(m, 0.2, 1, 4.0) == pytest.approx(1.0)
    assert expected_ideal_precision(m, 0.2, 2, 4.0) == pytest.approx(0.5)


@st.composite
def datasets(draw):
    n = draw(st.integers(2, 8))
    rows = {}
    for u in range(n):
        row = {f"i{j}": float(draw(st.integers(1, 5))) for j in range(6) if draw(st.booleans())}
        rows[f"u{u}"] = row or {"i0": 4.0}
    return Dataset(matrix(rows))


@given(datasets(), st.integers(1, 3), st.integers(1, 6), st.integers(0, 50), st.sampled_from(list(Mode)))
@settings(max_examples=60, deadline=None)
def test_metric_bounds(ds, k, n, seed, mode):
    k = min(k, len(ds.ratings.users))
    rep = evaluate(ds, ClusteringConfig(k, mode, max_iterations=5), n, 3.0, SplitConfig(0.3, seed))
    for s in rep.per_user:
        assert 0.0 <= s.precision <= 1.0 and 0.0 <= s.recall <= 1.0
    if not rep.no_evaluable_users:
        assert 0.0 <= rep.macro_precision <= 1.0
        assert 0.0 <= rep.macro_recall <= 1.0
        assert rep.macro_recall == pytest.approx(math.fsum(s.recall for s in rep.per_user) / len(rep.per_user))
