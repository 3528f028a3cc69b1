"""Batch active learning of linear reward functions from pairwise preferences."""

from .acquisition import (
    PoolScores,
    QueryScore,
    conditional_entropy_score,
    ranking_array,
    score_pool,
    volume_removal_score,
)
from .batch import STRATEGIES, SelectedBatch, select_batch
from .belief import (
    AdaptiveMetropolisConfig,
    PosteriorSamples,
    Response,
    likelihood,
    log_likelihood_approx,
    posterior_mean,
    sample_posterior,
)
from .envs import (
    ENV_NAMES,
    QueryCandidate,
    QueryPool,
    Trajectory,
    load_pool,
    make_env,
    sample_pool,
    save_pool,
)
from .geometry import KMedoidsResult, hull_vertices, kmedoids, pairwise_distances
from .oracle import Oracle, OracleConfig, sample_w_true
from .session import (
    ComparisonResult,
    ExperimentConfig,
    IterationRecord,
    SessionError,
    SessionLog,
    alignment,
    compare_methods,
    load_session_log,
    paired_oracle_config,
    run_session,
    save_session_log,
    wilcoxon_one_sided,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveMetropolisConfig",
    "ComparisonResult",
    "ENV_NAMES",
    "ExperimentConfig",
    "IterationRecord",
    "KMedoidsResult",
    "Oracle",
    "OracleConfig",
    "PoolScores",
    "PosteriorSamples",
    "QueryCandidate",
    "QueryPool",
    "QueryScore",
    "Response",
    "STRATEGIES",
    "SelectedBatch",
    "SessionError",
    "SessionLog",
    "Trajectory",
    "alignment",
    "compare_methods",
    "conditional_entropy_score",
    "hull_vertices",
    "kmedoids",
    "likelihood",
    "load_pool",
    "load_session_log",
    "log_likelihood_approx",
    "make_env",
    "paired_oracle_config",
    "pairwise_distances",
    "posterior_mean",
    "ranking_array",
    "run_session",
    "sample_pool",
    "sample_posterior",
    "sample_w_true",
    "save_pool",
    "save_session_log",
    "score_pool",
    "select_batch",
    "volume_removal_score",
    "wilcoxon_one_sided",
]
