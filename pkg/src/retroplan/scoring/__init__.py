"""Reaction scorers: token prior, plausibility classifier, ensemble."""

from .meta import (
    CalibrationResult,
    RankCalibrator,
    ScoreBundle,
    calibrate_thresholds,
    ensemble_accept,
    ensemble_score,
    load_thresholds,
    save_thresholds,
)
from .pipeline import ReactionScorer, dump_score_rows, fit_calibrator, load_score_rows
from .plausibility import (
    FingerprintClassifier,
    PlausibilityClassifier,
    loss_and_grad,
    reaction_features,
    train_plausibility_baseline,
)
from .prior import (
    MarkovTokenModel,
    PriorWeights,
    SiteBreakdown,
    TokenProbabilityModel,
    TokenScoreBreakdown,
    combined_prior,
    score_breakdown,
    score_center,
    score_sequence,
    score_site_selectivity,
    train_markov_model,
)
from .tokenizer import serialize_parts, serialize_reaction, tokenize

__all__ = [
    "CalibrationResult",
    "FingerprintClassifier",
    "MarkovTokenModel",
    "PlausibilityClassifier",
    "PriorWeights",
    "RankCalibrator",
    "ReactionScorer",
    "ScoreBundle",
    "SiteBreakdown",
    "TokenProbabilityModel",
    "TokenScoreBreakdown",
    "calibrate_thresholds",
    "combined_prior",
    "dump_score_rows",
    "ensemble_accept",
    "ensemble_score",
    "fit_calibrator",
    "load_score_rows",
    "load_thresholds",
    "loss_and_grad",
    "reaction_features",
    "save_thresholds",
    "score_breakdown",
    "score_center",
    "score_sequence",
    "score_site_selectivity",
    "serialize_parts",
    "serialize_reaction",
    "tokenize",
    "train_markov_model",
    "train_plausibility_baseline",
]
