"""streamrank: rank point outliers across hierarchically related data streams.

A univariate detector turns each stream into per-day test statistics (phi);
the ranking module calibrates those into globally comparable scores by
pooling block maxima over sibling sets within a 28-day regime, alongside
per-stream threshold and sibling-pool baselines; an evaluation harness and a
small triage gateway round out the daily review loop.
"""

from .detectors import (
    ArDetector,
    EwmaConfig,
    EwmaDetector,
    PhiSurface,
    ar_phi,
    compute_surface,
    ewma_phi,
    ewma_predict,
    residual_stats,
)
from .hierarchy import Hierarchy, Region, SiblingSet, context_of, load_hierarchy, sibling_sets
from .metrics import hamming_rank_distance, swap_correlation, topk_binary_metrics
from .ranking import (
    RankingConfig,
    ReferenceDistribution,
    ScoredPoint,
    build_reference,
    count_max_ties,
    empirical_quantile,
    outshines_score,
    rank_outshines,
    rank_sibling,
    rank_threshold,
    rank_threshold_point,
)
from .store import IngestReport, Stream, StreamStore, gaussian_smooth
from .synth import SyntheticSpec, generate_corpus, standard_corpus_spec

__version__ = "0.1.0"

__all__ = [
    "ArDetector",
    "EwmaConfig",
    "EwmaDetector",
    "Hierarchy",
    "IngestReport",
    "PhiSurface",
    "RankingConfig",
    "ReferenceDistribution",
    "Region",
    "ScoredPoint",
    "SiblingSet",
    "Stream",
    "StreamStore",
    "SyntheticSpec",
    "ar_phi",
    "build_reference",
    "compute_surface",
    "context_of",
    "count_max_ties",
    "empirical_quantile",
    "ewma_phi",
    "ewma_predict",
    "gaussian_smooth",
    "generate_corpus",
    "hamming_rank_distance",
    "load_hierarchy",
    "outshines_score",
    "rank_outshines",
    "rank_sibling",
    "rank_threshold",
    "rank_threshold_point",
    "residual_stats",
    "sibling_sets",
    "standard_corpus_spec",
    "swap_correlation",
    "topk_binary_metrics",
]
