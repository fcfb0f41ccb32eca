"""Two-community planted dataset and its exhaustive-enumeration oracle."""

from itertools import combinations
from math import ceil

from socialcf.dataset import Dataset, Rating, RatingsMatrix, SocialEdge, SocialGraph

BLOCK = 10
USERS_PER_COMMUNITY = 10


def planted_dataset(friends=False):
    """Users ``u00``..``u19``; even ids form community 0, odd ids community 1.

    Community ``c`` rates its own items ``i{10c}``..``i{10c+9}`` at 5 and
    shares one disliked item from the other block (rating 1), filling 10%
    of the cross-block cells.
    """
    ratings, community = [], {}
    for k in range(2 * USERS_PER_COMMUNITY):
        u, c = f"u{k:02d}", k % 2
        community[u] = c
        for j in range(BLOCK):
            ratings.append(Rating(u, f"i{BLOCK * c + j:02d}", 5.0))
        ratings.append(Rating(u, f"i{BLOCK * (1 - c):02d}", 1.0))
    edges = frozenset()
    if friends:
        users = sorted(community)
        edges = frozenset(SocialEdge(a, b, "friend") for a, b in zip(users, users[2:]))
    return Dataset(RatingsMatrix(ratings), SocialGraph(edges)), community


def expected_ideal_precision(ratings, fraction, n, threshold):
    """Macro precision@n of an oracle recommender, averaged over every split.

    For each user all ``C(m, h)`` holdout subsets are enumerated. The oracle
    ranks every relevant held-out item first, so a subset contributes
    ``min(n, relevant) / n``. Subsets with no relevant item are not
    evaluable and are skipped, as in the evaluation harness.
    """
    per_user = []
    for u in ratings.users:
        values = list(ratings.row(u).values())
        m = len(values)
        h = min(ceil(fraction * m - 1e-9), m - 1) if m >= 2 else 0
        scores = []
        for held in combinations(range(m), h):
            rel = sum(values[j] >= threshold for j in held)
            if rel:
                scores.append(min(n, rel) / n)
        if scores:
            per_user.append(sum(scores) / len(scores))
    return sum(per_user) / len(per_user)
