import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socialcf.dataset import (
    ContextTags,
    Dataset,
    Rating,
    RatingsMatrix,
    SocialGraph,
    co_rated_items,
    ingest_edges,
    ingest_ratings,
    ingest_users,
    user_mean,
    write_edges,
    write_ratings,
)
from socialcf.errors import DuplicateRating, EmptySupport, ParseError, UnknownUser


def test_small_ingest(small):
    assert len(small) == 7
    assert small.users == ("User1", "User2", "User3", "User4")
    assert dict(small.row("User2")) == {"Item2": 6.0}
    assert small.value("User2", "Item1") is None
    assert not small.has_rating("User2", "Item1")


def test_empty_body():
    m = ingest_ratings(io.StringIO("user_id,item_id,rating\n"))
    assert len(m) == 0
    assert m.users == ()


def test_negative_rating_reports_line():
    src = "user_id,item_id,rating\nUser1,Item2,5\nUser1,Item1,-3\n"
    with pytest.raises(ParseError) as exc:
        ingest_ratings(io.StringIO(src))
    assert exc.value.line == 3


@pytest.mark.parametrize(
    "row",
    ["User1,Item1", "User1,Item1,five", "User1,Item1,3,extra", ",Item1,3", "User1,Item1,nan"],
)
def test_malformed_rows(row):
    with pytest.raises(ParseError) as exc:
        ingest_ratings(io.StringIO("user_id,item_id,rating\n" + row + "\n"))
    assert exc.value.line == 2


def test_duplicate_rating():
    src = "user_id,item_id,rating\nu,i,1\nv,i,2\nu,i,3\n"
    with pytest.raises(DuplicateRating) as exc:
        ingest_ratings(io.StringIO(src))
    assert exc.value.line == 4


def test_bad_header():
    with pytest.raises(ParseError):
        ingest_ratings(io.StringIO("user,item,rating\nu,i,1\n"))
    with pytest.raises(ParseError):
        ingest_ratings(io.StringIO("user_id,item_id,rating,mood\nu,i,1,x\n"))


def test_context_columns():
    src = (
        "user_id,item_id,rating,location,time,weather,emotion\n"
        "u,i,4,athens,,sunny,\n"
        "u,j,2,,,,\n"
    )
    m = ingest_ratings(io.StringIO(src))
    assert m.get("u", "i").context == ContextTags(location="athens", weather="sunny")
    assert m.get("u", "j").context == ContextTags()


def test_context_column_subset():
    m = ingest_ratings(io.StringIO("user_id,item_id,rating,emotion\nu,i,4,happy\n"))
    assert m.get("u", "i").context.emotion == "happy"


def test_friend_edges_symmetrized():
    g = ingest_edges(io.StringIO("source,target,relation\nUser1,User3,friend\n"))
    assert {(e.source, e.target, e.relation) for e in g.edges} == {
        ("User1", "User3", "friend"),
        ("User3", "User1", "friend"),
    }


def test_follower_edge_directed():
    g = ingest_edges(io.StringIO("source,target,relation\nUser5,User2,follower\n"))
    assert len(g.edges) == 1
    assert g.neighbors("User5") == ("User2",)
    assert g.neighbors("User2") == ()


@pytest.mark.parametrize("row", ["User1,User1,friend", "User1,User2,enemy", "User1,User2"])
def test_bad_edges(row):
    with pytest.raises(ParseError) as exc:
        ingest_edges(io.StringIO("source,target,relation\n" + row + "\n"))
    assert exc.value.line == 2


def test_users_file():
    assert ingest_users(io.StringIO("user_id\na\nb\n")) == {"a", "b"}


def test_co_rated_items(small):
    assert co_rated_items(small, "User1", "User4") == ["Item1", "Item2"]
    assert co_rated_items(small, "User1", "User2") == ["Item2"]
    assert co_rated_items(small, "User1", "User1") == ["Item1", "Item2"]
    with pytest.raises(UnknownUser):
        co_rated_items(small, "User1", "Nobody")


def test_user_mean(small):
    assert user_mean(small, "User1", {"Item1", "Item2"}) == 3.5
    assert user_mean(small, "User4", {"Item1", "Item2"}) == 1.5
    assert user_mean(small, "User3", {"Item1"}) == 5.0
    with pytest.raises(EmptySupport):
        user_mean(small, "User1", set())


def test_dataset_all_users(small):
    g = SocialGraph(frozenset(), frozenset({"Ghost"}))
    ds = Dataset(small, g, frozenset({"Lurker"}))
    assert ds.all_users == {"User1", "User2", "User3", "User4", "Ghost", "Lurker"}


ids = st.sampled_from(["a", "b", "c", "d", "e"])
ctx = st.one_of(st.none(), st.sampled_from(["x", "y", "with space", 'quote"d', "com,ma"]))


@st.composite
def matrices(draw):
    cells = draw(st.dictionaries(st.tuples(ids, st.sampled_from(["i1", "i2", "i3", "i4"])), st.floats(0.01, 100), max_size=15))
    ratings = [
        Rating(u, i, v, ContextTags(draw(ctx), draw(ctx), draw(ctx), draw(ctx)))
        for (u, i), v in cells.items()
    ]
    return RatingsMatrix(ratings)


@given(matrices())
@settings(max_examples=200)
def test_round_trip(m):
    buf = io.StringIO()
    write_ratings(m, buf)
    again = ingest_ratings(io.StringIO(buf.getvalue()))
    assert again == m
    assert [r.context for r in again] == [r.context for r in m]


@given(st.lists(st.tuples(ids, ids, st.sampled_from(["friend", "follower", "member"])), max_size=20))
def test_friend_symmetry(rows):
    body = "".join(f"{s},{t},{r}\n" for s, t, r in rows if s != t)
    g = ingest_edges(io.StringIO("source,target,relation\n" + body))
    for e in g.edges:
        if e.relation == "friend":
            assert any(f.source == e.target and f.target == e.source and f.relation == "friend" for f in g.edges)
    buf = io.StringIO()
    write_edges(g, buf)
    assert ingest_edges(io.StringIO(buf.getvalue())) == g


@given(st.dictionaries(st.tuples(ids, st.sampled_from(["i1", "i2", "i3"])), st.sampled_from([0, 0, 1, 2.5, 7])))
def test_missing_is_not_zero(cells):
    body = "".join(f"{u},{i},{v}\n" for (u, i), v in cells.items())
    m = ingest_ratings(io.StringIO("user_id,item_id,rating\n" + body))
    for (u, i), v in cells.items():
        if v == 0:
            assert not m.has_rating(u, i)
            assert m.value(u, i) is None
    assert all(r.value > 0 for r in m)
    assert all(len(m.row(u)) > 0 for u in m.users)


@given(matrices(), ids, ids)
def test_co_rated_symmetric(m, a, b):
    if a in m and b in m:
        assert set(co_rated_items(m, a, b)) == set(co_rated_items(m, b, a))
