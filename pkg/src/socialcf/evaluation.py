"""Seeded holdout splits and precision/recall@N for the full pipeline."""

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .clustering import ClusteringConfig, cluster
from .dataset import Dataset, Rating
from .errors import ColdStartUnresolvable, InvalidConfig, NotEvaluable
from .recommender import recommend_top_n


@dataclass(frozen=True)
class SplitConfig:
    holdout_fraction: float = 0.2
    seed: int = 0
    per_user: bool = True

    def __post_init__(self):
        if not 0 < self.holdout_fraction < 1:
            raise InvalidConfig(f"holdout_fraction must be in (0, 1), got {self.holdout_fraction}")


def _holdout_count(fraction: float, m: int) -> int:
    # The tolerance keeps products such as 0.7 * 10 from rounding up to 8.
    h = math.ceil(fraction * m - 1e-9)
    return min(h, m - 1) if m >= 2 else 0


def split(dataset: Dataset, config: SplitConfig) -> Tuple[Dataset, List[Rating]]:
    """Hold out a seeded random subset of ratings.

    Per-user mode holds out ``ceil(fraction * m)`` of each user's ``m``
    ratings; global mode holds out ``ceil(fraction * total)`` ratings
    overall. Either way a user with two or more ratings keeps at least one
    in training and a single rating is never held out. The social graph
    and user set pass through unchanged.
    """
    if not len(dataset.ratings):
        raise InvalidConfig("cannot split an empty dataset")
    rng = random.Random(config.seed)
    held: List[Rating] = []
    if config.per_user:
        for u in dataset.ratings.users:
            rs = list(dataset.ratings.ratings_of(u).values())
            held.extend(rng.sample(rs, _holdout_count(config.holdout_fraction, len(rs))))
    else:
        pool = list(dataset.ratings)
        rng.shuffle(pool)
        target = math.ceil(config.holdout_fraction * len(pool) - 1e-9)
        remaining = {u: len(dataset.ratings.row(u)) for u in dataset.ratings.users}
        for r in pool:
            if len(held) >= target:
                break
            if remaining[r.user] >= 2:
                held.append(r)
                remaining[r.user] -= 1
    held.sort(key=lambda r: (r.user, r.item))
    held_keys = {(r.user, r.item) for r in held}
    train = dataset.ratings.select(lambda r: (r.user, r.item) not in held_keys)
    return Dataset(train, dataset.graph, dataset.all_users), held


def precision_at_n(recommended: Sequence[str], relevant: Set[str], n: int) -> float:
    """Relevant hits among the first ``n`` recommendations, divided by ``n``."""
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    return sum(1 for i in recommended[:n] if i in relevant) / n


def recall_at_n(recommended: Sequence[str], relevant: Set[str], n: int) -> float:
    """Fraction of ``relevant`` found among the first ``n`` recommendations."""
    if not relevant:
        raise NotEvaluable("recall is undefined for an empty relevant set")
    return sum(1 for i in recommended[:n] if i in relevant) / len(relevant)


@dataclass(frozen=True)
class UserScore:
    user: str
    precision: float
    recall: float
    hits: int
    relevant: int


@dataclass(frozen=True)
class EvaluationReport:
    n: int
    relevance_threshold: float
    evaluable_users: int
    macro_precision: Optional[float]
    macro_recall: Optional[float]
    cold_start_users: int
    fallback_only_users: int
    unresolved_users: int
    friend_retrieval: Optional[float]
    friend_retrieval_users: int
    per_user: Tuple[UserScore, ...] = ()
    settings: Dict[str, object] = field(default_factory=dict)

    @property
    def no_evaluable_users(self) -> bool:
        return self.evaluable_users == 0

    def as_dict(self, include_per_user: bool = True):
        out = {
            "n": self.n,
            "relevance_threshold": self.relevance_threshold,
            "settings": dict(self.settings),
            "evaluable_users": self.evaluable_users,
            "no_evaluable_users": self.no_evaluable_users,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "cold_start_users": self.cold_start_users,
            "fallback_only_users": self.fallback_only_users,
            "unresolved_users": self.unresolved_users,
            "friend_retrieval": self.friend_retrieval,
            "friend_retrieval_users": self.friend_retrieval_users,
        }
        if include_per_user:
            out["per_user"] = [
                {"user": s.user, "precision": s.precision, "recall": s.recall, "hits": s.hits, "relevant": s.relevant}
                for s in self.per_user
            ]
        return out


def friend_retrieval(dataset: Dataset, cs) -> Tuple[Optional[float], int]:
    """Mean fraction of a clustered user's clustered friends sharing their cluster.

    Returns ``(mean, users_counted)``; the mean is None when no clustered
    user has a clustered friend.
    """
    fractions = []
    for u in sorted(cs.assignment()):
        friends = [f for f in dataset.graph.friends(u) if f in cs]
        if friends:
            j = cs.cluster_of(u)
            fractions.append(sum(cs.cluster_of(f) == j for f in friends) / len(friends))
    if not fractions:
        return None, 0
    return math.fsum(fractions) / len(fractions), len(fractions)


def evaluate(
    dataset: Dataset,
    clustering: ClusteringConfig,
    n: int = 10,
    relevance_threshold: float = 4.0,
    split_cfg: Optional[SplitConfig] = None,
) -> EvaluationReport:
    """Split, cluster the training part, recommend, and score against held-out data.

    A user is evaluable when at least one held-out rating reaches
    ``relevance_threshold``. Macro averages run over evaluable users in id
    order. Friend retrieval is measured on the training clustering.
    """
    if n < 1:
        raise InvalidConfig("n must be >= 1")
    split_cfg = split_cfg or SplitConfig()
    train, test = split(dataset, split_cfg)
    cs = cluster(train.ratings, clustering)

    relevant: Dict[str, Set[str]] = {}
    for r in test:
        if r.value >= relevance_threshold:
            relevant.setdefault(r.user, set()).add(r.item)

    scores: List[UserScore] = []
    cold = fallback_only = unresolved = 0
    for u in sorted(relevant):
        rel = relevant[u]
        try:
            rec = recommend_top_n(train, cs, u, n)
        except ColdStartUnresolvable:
            unresolved += 1
            items: List[str] = []
        else:
            cold += rec.cold_start
            if rec.entries and all(p.fallback for p in rec.entries):
                fallback_only += 1
            items = rec.items()
        hits = sum(1 for i in items[:n] if i in rel)
        scores.append(UserScore(u, precision_at_n(items, rel, n), recall_at_n(items, rel, n), hits, len(rel)))

    fr, fr_users = friend_retrieval(train, cs)
    macro_p = math.fsum(s.precision for s in scores) / len(scores) if scores else None
    macro_r = math.fsum(s.recall for s in scores) / len(scores) if scores else None
    settings = {
        "k": clustering.k,
        "mode": clustering.mode.value,
        "max_iterations": clustering.max_iterations,
        "epsilon": clustering.epsilon,
        "holdout_fraction": split_cfg.holdout_fraction,
        "seed": split_cfg.seed,
        "per_user": split_cfg.per_user,
        "train_ratings": len(train.ratings),
        "test_ratings": len(test),
        "iterations_run": cs.iterations_run,
    }
    return EvaluationReport(
        n=n,
        relevance_threshold=relevance_threshold,
        evaluable_users=len(scores),
        macro_precision=macro_p,
        macro_recall=macro_r,
        cold_start_users=cold,
        fallback_only_users=fallback_only,
        unresolved_users=unresolved,
        friend_retrieval=fr,
        friend_retrieval_users=fr_users,
        per_user=tuple(scores),
        settings=settings,
    )
