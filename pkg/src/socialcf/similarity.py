"""Pearson correlation between users over their co-rated items."""

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .dataset import RatingsMatrix

MIN_OVERLAP = 2


class Undefined(enum.Enum):
    INSUFFICIENT_OVERLAP = "insufficient_overlap"
    ZERO_VARIANCE = "zero_variance"


@dataclass(frozen=True)
class SimilarityOutcome:
    """Either a defined correlation in [-1, 1] or the reason it is undefined."""

    value: Optional[float] = None
    reason: Optional[Undefined] = None

    def __post_init__(self):
        if (self.value is None) == (self.reason is None):
            raise ValueError("exactly one of value and reason must be set")

    @property
    def defined(self) -> bool:
        return self.reason is None

    def effective(self) -> float:
        """The value, with undefined outcomes mapped to the neutral 0.0."""
        return 0.0 if self.value is None else self.value


def pearson_pairs(xs: Sequence[float], ys: Sequence[float]) -> SimilarityOutcome:
    """Pearson correlation of paired samples ``xs`` and ``ys``.

    Means are taken over the pairs themselves. A constant sample has no
    variance and yields ``Undefined.ZERO_VARIANCE``; this is detected
    exactly rather than through a floating-point norm, which can leave a
    tiny non-zero residue for constant non-dyadic values.
    """
    n = len(xs)
    if n != len(ys):
        raise ValueError("samples must be paired")
    if n < MIN_OVERLAP:
        return SimilarityOutcome(reason=Undefined.INSUFFICIENT_OVERLAP)
    if min(xs) == max(xs) or min(ys) == max(ys):
        return SimilarityOutcome(reason=Undefined.ZERO_VARIANCE)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    num = math.fsum(a * b for a, b in zip(dx, dy))
    den = math.sqrt(math.fsum(a * a for a in dx) * math.fsum(b * b for b in dy))
    if den == 0.0:
        return SimilarityOutcome(reason=Undefined.ZERO_VARIANCE)
    # Cauchy-Schwarz bounds the exact value; only rounding can spill over.
    return SimilarityOutcome(value=max(-1.0, min(1.0, num / den)))


def _paired(ratings: RatingsMatrix, a: str, b: str) -> Tuple[List[float], List[float]]:
    ra, rb = ratings.row(a), ratings.row(b)
    common = sorted(i for i in ra if i in rb)
    return [ra[i] for i in common], [rb[i] for i in common]


def pearson(ratings: RatingsMatrix, a: str, b: str) -> SimilarityOutcome:
    """Pearson correlation of users ``a`` and ``b`` over their co-rated items.

    Raises:
        UnknownUser: either id has no ratings.
    """
    return pearson_pairs(*_paired(ratings, a, b))


def effective_similarity(ratings: RatingsMatrix, a: str, b: str) -> float:
    return pearson(ratings, a, b).effective()


def similarity_row(ratings: RatingsMatrix, a: str, candidates: Sequence[str]) -> List[Tuple[str, float]]:
    """Effective similarity of ``a`` against each candidate, in candidate order."""
    return [(c, effective_similarity(ratings, a, c)) for c in candidates]
