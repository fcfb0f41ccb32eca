"""Similarity-driven k-means over sparse user rating vectors.

The first ``k`` users (in id order) seed the clusters, each centroid being
an exact copy of its seed's rating vector. The remaining users are then
compared to every centroid with Pearson correlation and joined to the most
similar one. That single pass is the default; ``iterative`` mode adds the
usual mean update and repeats until the centroids settle.
"""

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from .dataset import RatingsMatrix
from .errors import InvalidK, NotClustered, ParseError
from .similarity import pearson_pairs


class Mode(str, enum.Enum):
    SINGLE_PASS = "single_pass"
    ITERATIVE = "iterative"


@dataclass(frozen=True)
class Centroid:
    """Pseudo-user rating vector (item -> real)."""

    vector: Mapping[str, float]

    def __post_init__(self):
        if not self.vector:
            raise ValueError("centroid must be non-empty")
        object.__setattr__(self, "vector", MappingProxyType({i: self.vector[i] for i in sorted(self.vector)}))

    def __eq__(self, other):
        if not isinstance(other, Centroid):
            return NotImplemented
        return dict(self.vector) == dict(other.vector)

    __hash__ = None


@dataclass(frozen=True)
class Cluster:
    seed: Optional[str]
    centroid: Optional[Centroid]
    members: FrozenSet[str]


@dataclass(frozen=True)
class ClusteringConfig:
    k: int
    mode: Mode = Mode.SINGLE_PASS
    max_iterations: int = 100
    epsilon: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.k < 1:
            raise InvalidK(f"k must be >= 1, got {self.k}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")


@dataclass(frozen=True)
class ClusterSet:
    """Partition of the rated users into ``k`` clusters, in seed order."""

    clusters: Tuple[Cluster, ...]
    mode: Mode
    iterations_run: int
    n_users: int = field(default=0, init=False)
    _index: Dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for j, c in enumerate(self.clusters):
            for u in c.members:
                if u in index:
                    raise ValueError(f"user {u!r} in clusters {index[u]} and {j}")
                index[u] = j
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "n_users", len(index))

    @property
    def k(self) -> int:
        return len(self.clusters)

    def __contains__(self, user):
        return user in self._index

    def members(self, j: int) -> List[str]:
        return sorted(self.clusters[j].members)

    def cluster_of(self, user: str) -> int:
        try:
            return self._index[user]
        except KeyError:
            raise NotClustered(user) from None

    def assignment(self) -> Dict[str, int]:
        return {u: self._index[u] for u in sorted(self._index)}

    def to_text(self) -> str:
        """Header ``k=.. mode=.. iterations=..`` then ``index<TAB>members``."""
        lines = [f"k={self.k} mode={self.mode.value} iterations={self.iterations_run}"]
        for j in range(self.k):
            members = self.members(j)
            for u in members:
                if any(ch in u for ch in ",\t\n\r"):
                    raise ValueError(f"user id {u!r} cannot be written to a cluster file")
            lines.append(f"{j}\t{','.join(members)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, ratings: Optional[RatingsMatrix] = None) -> "ClusterSet":
        """Parse :meth:`to_text` output.

        Seeds are not part of the file format. When ``ratings`` is given,
        each centroid is rebuilt as the per-item mean of its members.
        """
        lines = text.splitlines()
        if not lines:
            raise ParseError(1, "empty cluster file")
        try:
            header = dict(part.split("=", 1) for part in lines[0].split())
            k = int(header["k"])
            mode = Mode(header["mode"])
            iterations = int(header["iterations"])
        except (KeyError, ValueError):
            raise ParseError(1, f"bad cluster header {lines[0]!r}") from None
        body = [ln for ln in lines[1:] if ln.strip()]
        if len(body) != k:
            raise ParseError(1, f"header declares k={k} but {len(body)} cluster lines follow")
        clusters = []
        for lineno, ln in enumerate(lines[1:], start=2):
            if not ln.strip():
                continue
            idx, _, members = ln.partition("\t")
            if idx != str(len(clusters)):
                raise ParseError(lineno, f"expected cluster index {len(clusters)}, got {idx!r}")
            ms = frozenset(m for m in members.split(",") if m)
            centroid = None
            if ratings is not None and ms:
                centroid = _mean_centroid(ratings, ms)
            clusters.append(Cluster(None, centroid, ms))
        try:
            return cls(tuple(clusters), mode, iterations)
        except ValueError as exc:
            raise ParseError(None, str(exc)) from None


def init_centroids(ratings: RatingsMatrix, k: int) -> List[Tuple[str, Centroid]]:
    """Seed ``k`` centroids with copies of the first ``k`` users' vectors."""
    users = ratings.users
    if not 1 <= k <= len(users):
        raise InvalidK(f"k={k} outside 1..{len(users)} rated users")
    return [(u, Centroid(dict(ratings.row(u)))) for u in users[:k]]


def centroid_similarity(ratings: RatingsMatrix, u: str, c: Centroid) -> float:
    """Effective Pearson similarity between ``u`` and a centroid vector."""
    row = ratings.row(u)
    common = [i for i in c.vector if i in row]
    return pearson_pairs([row[i] for i in common], [c.vector[i] for i in common]).effective()


def assign(ratings: RatingsMatrix, centroids: Sequence[Centroid], users: Sequence[str]) -> Dict[str, int]:
    """Map each user to the index of its most similar centroid.

    Ties go to the lowest index, so the result is total even when every
    similarity is equal.
    """
    if not centroids:
        raise ValueError("no centroids")
    out = {}
    for u in users:
        best, best_sim = 0, centroid_similarity(ratings, u, centroids[0])
        for j in range(1, len(centroids)):
            s = centroid_similarity(ratings, u, centroids[j])
            if s > best_sim:
                best, best_sim = j, s
        out[u] = best
    return out


def _mean_centroid(ratings: RatingsMatrix, members) -> Centroid:
    sums: Dict[str, List[float]] = {}
    for u in sorted(members):
        for i, v in ratings.row(u).items():
            sums.setdefault(i, []).append(v)
    return Centroid({i: math.fsum(vs) / len(vs) for i, vs in sums.items()})


def update_centroids(ratings: RatingsMatrix, partition: Mapping[str, int], k: Optional[int] = None) -> List[Centroid]:
    """Recompute each centroid as the per-item mean of its members' ratings.

    Every cluster index in ``range(k)`` must have at least one member;
    :func:`cluster` repairs empty clusters before calling this.
    """
    if k is None:
        k = max(partition.values()) + 1
    groups: List[List[str]] = [[] for _ in range(k)]
    for u, j in partition.items():
        groups[j].append(u)
    for j, g in enumerate(groups):
        if not g:
            raise ValueError(f"cluster {j} is empty")
    return [_mean_centroid(ratings, g) for g in groups]


def centroid_movement(old: Centroid, new: Centroid) -> float:
    """Euclidean distance over the union of supports, absent entries read as 0."""
    a, b = old.vector, new.vector
    items = set(a) | set(b)
    return math.sqrt(math.fsum((a.get(i, 0.0) - b.get(i, 0.0)) ** 2 for i in sorted(items)))


def _repair_empty(ratings, partition, centroids, seeds, ever_seeded):
    """Re-seed empty clusters with the worst-fitting movable user.

    A user is movable when its cluster has at least two members. Users that
    have never served as a seed are preferred; ties go to the lowest id.
    """
    k = len(centroids)
    while True:
        sizes = [0] * k
        for j in partition.values():
            sizes[j] += 1
        empty = [j for j in range(k) if sizes[j] == 0]
        if not empty:
            return
        j_empty = empty[0]
        movable = [u for u in sorted(partition) if sizes[partition[u]] >= 2]
        pool = [u for u in movable if u not in ever_seeded] or movable
        worst = min(pool, key=lambda u: (centroid_similarity(ratings, u, centroids[partition[u]]), u))
        partition[worst] = j_empty
        centroids[j_empty] = Centroid(dict(ratings.row(worst)))
        seeds[j_empty] = worst
        ever_seeded.add(worst)


def cluster(ratings: RatingsMatrix, config: ClusteringConfig) -> ClusterSet:
    """Partition the rated users of ``ratings`` into ``config.k`` clusters.

    Raises:
        InvalidK: ``k`` exceeds the number of rated users.
    """
    seeded = init_centroids(ratings, config.k)
    seeds = [u for u, _ in seeded]
    centroids = [c for _, c in seeded]
    seed_set = set(seeds)
    # Seeds stay with their own centroid; only the rest are compared.
    partition = {u: j for j, u in enumerate(seeds)}
    partition.update(assign(ratings, centroids, [u for u in ratings.users if u not in seed_set]))

    if config.mode is Mode.SINGLE_PASS:
        return _build(partition, seeds, centroids, config.k, config.mode, 1)

    ever_seeded = set(seeds)
    iterations = 0
    while True:
        iterations += 1
        new = update_centroids(ratings, partition, config.k)
        moved = math.fsum(centroid_movement(o, c) for o, c in zip(centroids, new))
        centroids = new
        if moved <= config.epsilon or iterations >= config.max_iterations:
            break
        partition = assign(ratings, centroids, ratings.users)
        _repair_empty(ratings, partition, centroids, seeds, ever_seeded)
    return _build(partition, seeds, centroids, config.k, config.mode, iterations)


def _build(partition, seeds, centroids, k, mode, iterations) -> ClusterSet:
    groups = [set() for _ in range(k)]
    for u, j in partition.items():
        groups[j].add(u)
    clusters = tuple(Cluster(seeds[j], centroids[j], frozenset(groups[j])) for j in range(k))
    return ClusterSet(clusters, Mode(mode), iterations)
