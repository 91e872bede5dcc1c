"""Sparse canonical pairs with rank-based covariance."""

from ._core import (
    CanonicalPair,
    ConfigError,
    DegenerateColumn,
    DegeneratePair,
    EstimatorMode,
    FitResult,
    GroundTruth,
    InvalidInput,
    KMatrix,
    MetricsReport,
    NoViableLambda,
    ParseError,
    PermutationSummary,
    TailDivisor,
    TailMode,
    build_k,
    cli,
    compute_metrics,
    count_significant,
    covariance,
    deflate,
    fit_pairs,
    make_folds,
    permutation_test,
    rank_transform,
    sigma_yy_entry,
    simulate,
    soft_threshold,
    sparse_singular_pair,
)

__version__ = "0.1.0"
