"""Ratings, contexts and the social graph, plus CSV ingestion.

Two file formats are supported, both UTF-8 and comma separated:

* ratings: ``user_id,item_id,rating[,location,time,weather,emotion]``.
  A rating of exactly ``0`` marks a missing cell and is skipped.
* edges: ``source,target,relation`` with relation one of
  ``friend``, ``follower`` or ``member``. Friendship is symmetric, so a
  friend edge in either direction produces both directed edges.
"""

import csv
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .errors import DuplicateRating, EmptySupport, ParseError, UnknownUser

CONTEXT_DIMENSIONS = ("location", "time", "weather", "emotion")
RATING_COLUMNS = ("user_id", "item_id", "rating")
EDGE_COLUMNS = ("source", "target", "relation")
RELATIONS = ("friend", "follower", "member")


@dataclass(frozen=True)
class ContextTags:
    """Situational tags attached to a rating. ``None`` means unspecified."""

    location: Optional[str] = None
    time: Optional[str] = None
    weather: Optional[str] = None
    emotion: Optional[str] = None

    def as_dict(self) -> Dict[str, str]:
        return {d: getattr(self, d) for d in CONTEXT_DIMENSIONS if getattr(self, d) is not None}


NO_CONTEXT = ContextTags()


@dataclass(frozen=True)
class Rating:
    user: str
    item: str
    value: float
    context: ContextTags = NO_CONTEXT

    def __post_init__(self):
        if not self.user or not self.item:
            raise ValueError("user and item ids must be non-empty")
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError(f"rating value must be a positive finite number, got {self.value!r}")


@dataclass(frozen=True, order=True)
class SocialEdge:
    source: str
    target: str
    relation: str

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        if self.source == self.target:
            raise ValueError(f"self-loop on {self.source!r}")


class RatingsMatrix:
    """Sparse user x item table of positive ratings.

    Rows and columns are kept in lexicographic id order so that every
    traversal is deterministic. Unrated cells are simply absent; ``value``
    returns ``None`` for them, never ``0``.
    """

    def __init__(self, ratings: Iterable[Rating] = ()):
        rows: Dict[str, Dict[str, Rating]] = {}
        for r in ratings:
            row = rows.setdefault(r.user, {})
            if r.item in row:
                raise DuplicateRating(None, f"duplicate rating for ({r.user!r}, {r.item!r})")
            row[r.item] = r
        self._rows = {u: {i: rows[u][i] for i in sorted(rows[u])} for u in sorted(rows)}
        self._values = {u: {i: r.value for i, r in row.items()} for u, row in self._rows.items()}
        self._users = tuple(self._rows)
        self._items = tuple(sorted({i for row in self._rows.values() for i in row}))
        self._size = sum(len(row) for row in self._rows.values())

    @property
    def users(self) -> Tuple[str, ...]:
        """Rated users in canonical order."""
        return self._users

    @property
    def items(self) -> Tuple[str, ...]:
        return self._items

    def __len__(self):
        return self._size

    def __iter__(self):
        for row in self._rows.values():
            yield from row.values()

    def __contains__(self, user):
        return user in self._rows

    def __eq__(self, other):
        if not isinstance(other, RatingsMatrix):
            return NotImplemented
        return self._rows == other._rows

    def __repr__(self):
        return f"RatingsMatrix({len(self._users)} users, {len(self._items)} items, {self._size} ratings)"

    def _check(self, user):
        if user not in self._rows:
            raise UnknownUser(user)

    def row(self, user: str) -> Mapping[str, float]:
        """Item -> value mapping for ``user``."""
        self._check(user)
        return MappingProxyType(self._values[user])

    def ratings_of(self, user: str) -> Mapping[str, Rating]:
        self._check(user)
        return MappingProxyType(self._rows[user])

    def get(self, user: str, item: str) -> Optional[Rating]:
        return self._rows.get(user, {}).get(item)

    def value(self, user: str, item: str) -> Optional[float]:
        return self._values.get(user, {}).get(item)

    def has_rating(self, user: str, item: str) -> bool:
        return item in self._values.get(user, ())

    def value_range(self) -> Optional[Tuple[float, float]]:
        """(min, max) over all stored values, or None when empty."""
        if not self._size:
            return None
        vals = [v for row in self._values.values() for v in row.values()]
        return min(vals), max(vals)

    def select(self, keep) -> "RatingsMatrix":
        """New matrix holding the ratings for which ``keep(rating)`` is true."""
        return RatingsMatrix(r for r in self if keep(r))


@dataclass(frozen=True)
class SocialGraph:
    """Typed directed graph over user ids.

    Friend edges are closed under symmetry on construction, so
    ``(a, b, friend)`` is present iff ``(b, a, friend)`` is.
    """

    edges: FrozenSet[SocialEdge] = frozenset()
    users: FrozenSet[str] = frozenset()

    def __post_init__(self):
        edges = set(self.edges)
        for e in list(edges):
            if e.relation == "friend":
                edges.add(SocialEdge(e.target, e.source, "friend"))
        users = set(self.users)
        for e in edges:
            users.update((e.source, e.target))
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "users", frozenset(users))
        out: Dict[str, set] = {}
        for e in edges:
            out.setdefault(e.source, set()).add(e.target)
        object.__setattr__(self, "_out", {u: tuple(sorted(v)) for u, v in out.items()})

    def neighbors(self, user: str) -> Tuple[str, ...]:
        """Targets of ``user``'s outgoing edges, any relation, sorted.

        Because friendship is symmetric this covers friends in both
        directions plus followed users and groups joined.
        """
        return self._out.get(user, ())

    def friends(self, user: str) -> Tuple[str, ...]:
        return tuple(sorted(e.target for e in self.edges if e.source == user and e.relation == "friend"))

    def sorted_edges(self) -> List[SocialEdge]:
        return sorted(self.edges)


@dataclass(frozen=True)
class Dataset:
    """Ratings plus social graph. ``all_users`` is widened to cover both."""

    ratings: RatingsMatrix = field(default_factory=RatingsMatrix)
    graph: SocialGraph = field(default_factory=SocialGraph)
    all_users: FrozenSet[str] = frozenset()

    def __post_init__(self):
        users = set(self.all_users) | set(self.ratings.users) | set(self.graph.users)
        object.__setattr__(self, "all_users", frozenset(users))


def _header(reader, expected_prefix, optional=()):
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "missing header") from None
    head = [h.strip() for h in header]
    n = len(expected_prefix)
    if tuple(head[:n]) != expected_prefix:
        raise ParseError(reader.line_num, f"expected header starting {','.join(expected_prefix)}")
    extra = head[n:]
    if any(c not in optional for c in extra) or len(set(extra)) != len(extra):
        raise ParseError(reader.line_num, f"unexpected header columns {extra}")
    return head


def ingest_ratings(source) -> RatingsMatrix:
    """Read a ratings CSV stream into a :class:`RatingsMatrix`.

    Raises:
        ParseError: malformed row (wrong column count, bad or negative
            rating, empty id), with the offending line number.
        DuplicateRating: the same (user, item) pair appears twice.
    """
    reader = csv.reader(source)
    head = _header(reader, RATING_COLUMNS, CONTEXT_DIMENSIONS)
    ctx_cols = [(j, name) for j, name in enumerate(head) if name in CONTEXT_DIMENSIONS]
    ratings = []
    seen = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(head):
            raise ParseError(line, f"expected {len(head)} columns, got {len(row)}")
        user, item, raw = row[0], row[1], row[2]
        if not user or not item:
            raise ParseError(line, "empty user or item id")
        try:
            value = float(raw)
        except ValueError:
            raise ParseError(line, f"non-numeric rating {raw!r}") from None
        if not math.isfinite(value):
            raise ParseError(line, f"non-finite rating {raw!r}")
        if value < 0:
            raise ParseError(line, f"negative rating {raw!r}")
        if value == 0:
            continue
        key = (user, item)
        if key in seen:
            raise DuplicateRating(line, f"duplicate rating for ({user!r}, {item!r}), first seen on line {seen[key]}")
        seen[key] = line
        ctx = ContextTags(**{name: row[j] or None for j, name in ctx_cols})
        ratings.append(Rating(user, item, value, ctx))
    return RatingsMatrix(ratings)


def write_ratings(matrix: RatingsMatrix, sink) -> None:
    """Write ``matrix`` in the full seven-column ratings format, sorted."""
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(RATING_COLUMNS + CONTEXT_DIMENSIONS)
    for r in matrix:
        w.writerow([r.user, r.item, repr(r.value)] + [getattr(r.context, d) or "" for d in CONTEXT_DIMENSIONS])


def ingest_edges(source) -> SocialGraph:
    """Read an edges CSV stream. Friend edges are symmetrized.

    Raises:
        ParseError: unknown relation, self-loop or wrong column count.
    """
    reader = csv.reader(source)
    head = _header(reader, EDGE_COLUMNS)
    edges = set()
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(head):
            raise ParseError(line, f"expected {len(head)} columns, got {len(row)}")
        src, dst, rel = row
        if not src or not dst:
            raise ParseError(line, "empty user id")
        if rel not in RELATIONS:
            raise ParseError(line, f"unknown relation {rel!r}")
        if src == dst:
            raise ParseError(line, f"self-loop on {src!r}")
        edges.add(SocialEdge(src, dst, rel))
    return SocialGraph(frozenset(edges))


def write_edges(graph: SocialGraph, sink) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(EDGE_COLUMNS)
    for e in graph.sorted_edges():
        w.writerow([e.source, e.target, e.relation])


def ingest_users(source) -> FrozenSet[str]:
    """Read a one-column ``user_id`` list (users known only by id)."""
    reader = csv.reader(source)
    _header(reader, ("user_id",))
    users = set()
    for row in reader:
        if not row:
            continue
        if len(row) != 1 or not row[0]:
            raise ParseError(reader.line_num, "expected exactly one non-empty user id")
        users.add(row[0])
    return frozenset(users)


def write_users(users: Iterable[str], sink) -> None:
    w = csv.writer(sink, lineterminator="\n")
    w.writerow(["user_id"])
    for u in sorted(users):
        w.writerow([u])


def co_rated_items(ratings: RatingsMatrix, a: str, b: str) -> List[str]:
    """Items rated by both ``a`` and ``b``, in lexicographic order."""
    ra, rb = ratings.row(a), ratings.row(b)
    if len(rb) < len(ra):
        ra, rb = rb, ra
    return sorted(i for i in ra if i in rb)


def user_mean(ratings: RatingsMatrix, u: str, over: Optional[Iterable[str]] = None) -> float:
    """Arithmetic mean of ``u``'s ratings, restricted to ``over`` if given.

    Raises:
        EmptySupport: ``over`` is empty.
        KeyError: an item in ``over`` is not rated by ``u``.
    """
    row = ratings.row(u)
    items = sorted(row) if over is None else sorted(over)
    if not items:
        raise EmptySupport(f"mean of {u!r} over an empty item set")
    return math.fsum(row[i] for i in items) / len(items)
