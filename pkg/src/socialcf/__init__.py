"""Cluster-restricted collaborative filtering with social-graph cold start.

Users are grouped by Pearson similarity of their rating vectors with a
first-k seeded k-means; recommendations for a user are computed only from
the members of that user's cluster, after optional context pre-filtering.
Users without ratings are placed through their social neighbours.
"""

from .clustering import (
    Centroid,
    Cluster,
    ClusteringConfig,
    ClusterSet,
    Mode,
    assign,
    centroid_similarity,
    cluster,
    init_centroids,
    update_centroids,
)
from .dataset import (
    ContextTags,
    Dataset,
    Rating,
    RatingsMatrix,
    SocialEdge,
    SocialGraph,
    co_rated_items,
    ingest_edges,
    ingest_ratings,
    user_mean,
    write_edges,
    write_ratings,
)
from .errors import (
    ColdStartUnresolvable,
    DuplicateRating,
    EmptySupport,
    InvalidConfig,
    InvalidK,
    NotClustered,
    NotEvaluable,
    ParseError,
    SocialCFError,
    UnknownItem,
    UnknownUser,
)
from .evaluation import EvaluationReport, SplitConfig, evaluate, precision_at_n, recall_at_n, split
from .recommender import (
    ContextQuery,
    Prediction,
    RecommendationList,
    cold_start_cluster,
    context_prefilter,
    popular_items,
    predict,
    recommend_top_n,
)
from .similarity import SimilarityOutcome, Undefined, effective_similarity, pearson, similarity_row

__version__ = "0.1.0"
