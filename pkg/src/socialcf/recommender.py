"""Context pre-filtering, within-cluster CF prediction and top-N lists.

The pipeline for one request is::

    context_prefilter -> cluster lookup (or social cold start)
        -> predict every candidate item -> rank -> truncate

Only members of the active user's cluster act as neighbours.
"""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

from .clustering import ClusterSet
from .dataset import CONTEXT_DIMENSIONS, ContextTags, Dataset, RatingsMatrix
from .errors import ColdStartUnresolvable, InvalidConfig, UnknownItem, UnknownUser
from .similarity import effective_similarity

# Dimensions are dropped in this order when too few ratings match.
RELAXATION_ORDER = ("emotion", "weather", "time", "location")


@dataclass(frozen=True)
class ContextQuery:
    location: Optional[str] = None
    time: Optional[str] = None
    weather: Optional[str] = None
    emotion: Optional[str] = None

    @classmethod
    def parse(cls, text: Optional[str]) -> "ContextQuery":
        """Parse ``"location=athens,time=evening"``. Unknown dimensions are rejected."""
        if not text:
            return cls()
        values = {}
        for part in text.split(","):
            dim, sep, val = part.partition("=")
            dim, val = dim.strip(), val.strip()
            if not sep or not val:
                raise InvalidConfig(f"context entry {part!r} is not dim=value")
            if dim not in CONTEXT_DIMENSIONS:
                raise InvalidConfig(f"unknown context dimension {dim!r}")
            if dim in values:
                raise InvalidConfig(f"context dimension {dim!r} given twice")
            values[dim] = val
        return cls(**values)

    def as_dict(self) -> Dict[str, str]:
        return {d: getattr(self, d) for d in CONTEXT_DIMENSIONS if getattr(self, d) is not None}

    def dimensions(self) -> Tuple[str, ...]:
        return tuple(self.as_dict())

    def matches(self, tags: ContextTags) -> bool:
        # An untagged rating never matches a queried dimension.
        return all(getattr(tags, d) == v for d, v in self.as_dict().items())

    def without(self, dim: str) -> "ContextQuery":
        values = self.as_dict()
        values.pop(dim, None)
        return ContextQuery(**values)


class Prefiltered(NamedTuple):
    ratings: RatingsMatrix
    applied: ContextQuery


def context_prefilter(ratings: RatingsMatrix, q: ContextQuery, min_support: int = 0) -> Prefiltered:
    """Keep the ratings whose tags match every dimension set in ``q``.

    While fewer than ``min_support`` ratings survive, query dimensions are
    dropped in :data:`RELAXATION_ORDER`. Returns the filtered matrix and
    the query that was finally applied.
    """
    if min_support < 0:
        raise InvalidConfig("min_support must be >= 0")
    for dim in (None,) + RELAXATION_ORDER:
        if dim is not None:
            if getattr(q, dim) is None:
                continue
            q = q.without(dim)
        if not q.dimensions():
            return Prefiltered(ratings, q)
        filtered = ratings.select(lambda r: q.matches(r.context))
        if len(filtered) >= min_support:
            return Prefiltered(filtered, q)
    return Prefiltered(ratings, q)


@dataclass(frozen=True)
class Prediction:
    item: str
    score: float
    support: int
    fallback: bool = False

    def as_dict(self):
        return {"item": self.item, "score": self.score, "support": self.support, "fallback": self.fallback}


@dataclass(frozen=True)
class RecommendationList:
    user: str
    entries: Tuple[Prediction, ...]
    n: int
    cluster: Optional[int] = None
    cold_start: bool = False
    requested: ContextQuery = ContextQuery()
    applied: ContextQuery = ContextQuery()

    def items(self) -> List[str]:
        return [p.item for p in self.entries]

    def as_dict(self):
        return {
            "user": self.user,
            "n": self.n,
            "cluster": self.cluster,
            "cold_start": self.cold_start,
            "fallback": None,
            "query": {"requested": self.requested.as_dict(), "applied": self.applied.as_dict()},
            "entries": [p.as_dict() for p in self.entries],
        }


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


def _cluster_range(ratings: RatingsMatrix, members) -> Optional[Tuple[float, float]]:
    vals = [v for m in members if m in ratings for v in ratings.row(m).values()]
    if not vals:
        return None
    return min(vals), max(vals)


def predict(ratings: RatingsMatrix, cs: ClusterSet, u: str, i: str, cluster: Optional[int] = None) -> Prediction:
    """Similarity-weighted mean-deviation prediction of ``u``'s rating for ``i``.

    Neighbours are the other members of ``u``'s cluster who rated ``i`` and
    have a non-zero effective similarity to ``u``::

        score = mean(u) + sum(sim(u,v) * (r[v,i] - mean(v))) / sum(|sim(u,v)|)

    Means are over each user's full rated set. The score is clamped to the
    rating range observed inside the cluster. Without neighbours the score
    falls back to ``mean(u)`` and ``fallback`` is set.

    ``cluster`` overrides the lookup; pass the result of
    :func:`cold_start_cluster` for users absent from ``cs``. A user with no
    ratings at all is scored by the plain mean of the cluster's ratings of
    ``i`` (the centroid entry), since no similarity can be computed.

    Raises:
        NotClustered: ``u`` is not in ``cs`` and no ``cluster`` was given.
        UnknownItem: nobody in ``ratings`` rated ``i``.
    """
    j = cs.cluster_of(u) if cluster is None else cluster
    if i not in ratings.items:
        raise UnknownItem(i)
    members = [m for m in cs.members(j) if m != u and m in ratings]
    raters = [m for m in members if ratings.has_rating(m, i)]

    if u not in ratings:
        if not raters:
            raise UnknownItem(i)
        return Prediction(i, _mean(ratings.value(v, i) for v in raters), len(raters))

    mean_u = _mean(ratings.row(u).values())
    num, den, support = [], [], 0
    for v in raters:
        s = effective_similarity(ratings, u, v)
        if s == 0.0:
            continue
        num.append(s * (ratings.value(v, i) - _mean(ratings.row(v).values())))
        den.append(abs(s))
        support += 1
    if not support:
        return Prediction(i, mean_u, 0, fallback=True)
    score = mean_u + math.fsum(num) / math.fsum(den)
    lo, hi = _cluster_range(ratings, members + [u])
    return Prediction(i, min(hi, max(lo, score)), support)


def cold_start_cluster(dataset: Dataset, cs: ClusterSet, u: str) -> int:
    """Majority cluster among ``u``'s clustered social neighbours.

    Neighbours are the targets of ``u``'s outgoing edges: friends (which
    are symmetric) plus users ``u`` follows or groups ``u`` belongs to.
    Ties go to the lowest cluster index.

    Raises:
        UnknownUser: ``u`` is not in the dataset.
        ColdStartUnresolvable: no neighbour is clustered.
    """
    if u not in dataset.all_users:
        raise UnknownUser(u)
    if u in cs:
        return cs.cluster_of(u)
    votes = Counter(cs.cluster_of(v) for v in dataset.graph.neighbors(u) if v in cs)
    if not votes:
        raise ColdStartUnresolvable(u)
    top = max(votes.values())
    return min(j for j, c in votes.items() if c == top)


def popular_items(ratings: RatingsMatrix, n: int) -> List[str]:
    """Items by rating count desc, then mean rating desc, then id."""
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    return [item for item, _, _ in item_popularity(ratings)[:n]]


def item_popularity(ratings: RatingsMatrix) -> List[Tuple[str, int, float]]:
    """``(item, count, mean)`` rows in popularity order."""
    cols: Dict[str, List[float]] = {}
    for r in ratings:
        cols.setdefault(r.item, []).append(r.value)
    stats = [(i, len(v), _mean(v)) for i, v in cols.items()]
    stats.sort(key=lambda t: (-t[1], -t[2], t[0]))
    return stats


def _rank_key(p: Prediction):
    return (p.fallback, -p.score, p.item)


def recommend_top_n(
    dataset: Dataset,
    cs: ClusterSet,
    u: str,
    n: int,
    q: Optional[ContextQuery] = None,
    min_support: int = 0,
) -> RecommendationList:
    """Top-``n`` unrated items for ``u`` from within ``u``'s cluster.

    Ratings are first pre-filtered by ``q``; the active user's own profile
    is kept whole so that their similarities and mean stay defined. Users
    absent from ``cs`` are placed by :func:`cold_start_cluster`.

    Entries are sorted by score descending then item id; predictions that
    fell back to the user mean always rank after supported ones.

    Raises:
        UnknownUser: ``u`` is not in the dataset.
        ColdStartUnresolvable: ``u`` is unclustered and has no clustered
            social neighbour.
    """
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    if u not in dataset.all_users:
        raise UnknownUser(u)
    q = q or ContextQuery()
    filtered, applied = context_prefilter(dataset.ratings, q, min_support)

    cold = u not in cs
    j = cold_start_cluster(dataset, cs, u) if cold else cs.cluster_of(u)

    own = dataset.ratings.ratings_of(u) if u in dataset.ratings else {}
    if own:
        working = RatingsMatrix([r for r in filtered if r.user != u] + list(own.values()))
    else:
        working = filtered

    candidates = sorted({
        i
        for m in cs.members(j)
        if m != u and m in working
        for i in working.row(m)
        if i not in own
    })
    preds = [predict(working, cs, u, i, cluster=j) for i in candidates]
    preds.sort(key=_rank_key)
    return RecommendationList(u, tuple(preds[:n]), n, j, cold, q, applied)
