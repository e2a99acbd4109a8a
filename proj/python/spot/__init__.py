"""Originality-score detection of machine-generated text.

Thin Python surface over the C++ library: score token sequences by rank
under a scoring model, calibrate thresholds, and run the cross-model
evaluation matrix.
"""

from ._spot import (
    FixtureServer,
    Label,
    NgramModel,
    OriginalityReport,
    RemoteModel,
    ScoringModel,
    SpotError,
    ThresholdProfile,
    Verdict,
    accuracy,
    aggregate_score,
    calibrate_percentile,
    calibrate_sweep,
    classify,
    evaluate,
    kde_at,
    kde_density,
    per_token_scores,
    rank_of,
    tokenize_words,
)

__version__ = "0.1.0"

__all__ = [
    "FixtureServer",
    "Label",
    "NgramModel",
    "OriginalityReport",
    "RemoteModel",
    "ScoringModel",
    "SpotError",
    "ThresholdProfile",
    "Verdict",
    "accuracy",
    "aggregate_score",
    "calibrate_percentile",
    "calibrate_sweep",
    "classify",
    "evaluate",
    "kde_at",
    "kde_density",
    "per_token_scores",
    "rank_of",
    "tokenize_words",
]
