"""Ensemble aggregation of the three reaction scorers and threshold
calibration by grid search."""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateData


def ensemble_score(classifier_score: float, prior_score: float,
                   reference_count: int) -> float:
    """max of the two model scores, gated on having any precedent.

    Exactly 0 whenever reference_count == 0; inputs are expected on a
    common [0, 1] scale (the prior goes through rank calibration first).
    """
    if reference_count <= 0:
        return 0.0
    return max(classifier_score, prior_score)


def ensemble_accept(classifier_score: float, prior_score: float,
                    reference_count: int, thr_classifier: float,
                    thr_prior: float) -> int:
    """Binary filter: 1 iff both scores strictly beat their thresholds and
    at least one reference reaction exists."""
    return int(classifier_score > thr_classifier
               and prior_score > thr_prior
               and reference_count > 0)


@dataclass(frozen=True)
class ScoreBundle:
    """Everything the pipeline knows about one reaction's plausibility."""

    prior_score: float            # rank-calibrated, [0, 1]
    prior_log: float              # combined prior in log domain
    sequence_score: float
    center_score: float
    selectivity_score: float
    classifier_score: float       # [0, 1]
    reference_count: int
    ensemble: float = 0.0
    accepted: int = 0
    thr_classifier: float = 0.0
    thr_prior: float = 0.0

    def __post_init__(self):
        if self.reference_count == 0 and self.ensemble != 0.0:
            raise ValueError("ensemble must be 0 without references")

    def to_json(self) -> dict:
        return {
            "prior_score": self.prior_score,
            "prior_log": self.prior_log,
            "components": {
                "sequence": self.sequence_score,
                "center": self.center_score,
                "selectivity": self.selectivity_score,
            },
            "classifier_score": self.classifier_score,
            "reference_count": self.reference_count,
            "ensemble": self.ensemble,
            "accepted": self.accepted,
            "thresholds": {
                "classifier": self.thr_classifier,
                "prior": self.thr_prior,
            },
        }

    @staticmethod
    def from_json(d: dict) -> "ScoreBundle":
        return ScoreBundle(
            prior_score=d["prior_score"],
            prior_log=d["prior_log"],
            sequence_score=d["components"]["sequence"],
            center_score=d["components"]["center"],
            selectivity_score=d["components"]["selectivity"],
            classifier_score=d["classifier_score"],
            reference_count=d["reference_count"],
            ensemble=d["ensemble"],
            accepted=d["accepted"],
            thr_classifier=d["thresholds"]["classifier"],
            thr_prior=d["thresholds"]["prior"],
        )


class RankCalibrator:
    """Empirical-CDF mapping of raw prior scores onto [0, 1]."""

    def __init__(self, reference: list[float]):
        if not reference:
            raise DegenerateData("empty calibration reference")
        self.reference = sorted(reference)

    def transform(self, value: float) -> float:
        return bisect.bisect_right(self.reference, value) / (
            len(self.reference) + 1)

    def to_json(self) -> list[float]:
        return list(self.reference)


@dataclass
class CalibrationResult:
    thr_classifier: float
    thr_prior: float
    precision: float
    recall: float
    achieved_target: bool
    grid_points: int = 101


def calibrate_thresholds(samples: list[tuple["ScoreBundle", int]],
                         target_precision: float = 0.8,
                         grid_points: int = 101) -> CalibrationResult:
    """Grid-search thresholds maximizing recall at the target precision.

    The grid spans each score's observed range with ``grid_points`` values
    per axis. Among feasible points, maximal recall wins, ties go to the
    higher precision, then the lower (classifier, prior) threshold pair.
    When no point reaches the target, the maximum-precision point is
    returned with achieved_target=False.
    """
    if not samples:
        raise DegenerateData("no calibration samples")
    labels = np.array([y for _, y in samples], dtype=bool)
    if labels.all() or not labels.any():
        raise DegenerateData("calibration needs both classes")
    s_cls = np.array([b.classifier_score for b, _ in samples])
    s_pri = np.array([b.prior_score for b, _ in samples])
    has_ref = np.array([b.reference_count > 0 for b, _ in samples])

    grid_c = np.linspace(s_cls.min(), s_cls.max(), grid_points)
    grid_p = np.linspace(s_pri.min(), s_pri.max(), grid_points)

    # bucket samples by how many grid thresholds they strictly beat
    ic = np.searchsorted(grid_c, s_cls, side="left")
    ip = np.searchsorted(grid_p, s_pri, side="left")
    shape = (grid_points + 1, grid_points + 1)
    tp_hist = np.zeros(shape)
    fp_hist = np.zeros(shape)
    mask = has_ref
    np.add.at(tp_hist, (ic[mask & labels], ip[mask & labels]), 1)
    np.add.at(fp_hist, (ic[mask & ~labels], ip[mask & ~labels]), 1)
    # suffix sums: predictions at grid (gc, gp) count samples with index > g
    tp = np.flip(np.flip(tp_hist, 0).cumsum(0), 0)
    tp = np.flip(np.flip(tp, 1).cumsum(1), 1)[1:, 1:]
    fp = np.flip(np.flip(fp_hist, 0).cumsum(0), 0)
    fp = np.flip(np.flip(fp, 1).cumsum(1), 1)[1:, 1:]

    predicted = tp + fp
    total_pos = labels.sum()
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / np.maximum(predicted, 1), 0.0)
    recall = tp / total_pos

    feasible = (precision >= target_precision) & (predicted > 0)
    if feasible.any():
        best_recall = recall[feasible].max()
        at_recall = feasible & (recall == best_recall)
        best_precision = precision[at_recall].max()
        pick = at_recall & (precision == best_precision)
        gc, gp = min(zip(*np.nonzero(pick)))
        return CalibrationResult(
            float(grid_c[gc]), float(grid_p[gp]),
            float(precision[gc, gp]), float(recall[gc, gp]),
            achieved_target=True, grid_points=grid_points)
    # unachievable: report the max-precision point
    usable = predicted > 0
    best_precision = precision[usable].max() if usable.any() else 0.0
    pick = usable & (precision == best_precision)
    if pick.any():
        best_recall = recall[pick].max()
        pick = pick & (recall == best_recall)
        gc, gp = min(zip(*np.nonzero(pick)))
    else:
        gc, gp = grid_points - 1, grid_points - 1
    return CalibrationResult(
        float(grid_c[gc]), float(grid_p[gp]),
        float(precision[gc, gp]), float(recall[gc, gp]),
        achieved_target=False, grid_points=grid_points)


def save_thresholds(path, result: CalibrationResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "thr_classifier": result.thr_classifier,
                "thr_prior": result.thr_prior,
                "precision": result.precision,
                "recall": result.recall,
                "achieved_target": result.achieved_target,
                "grid_points": result.grid_points,
            },
            fh, indent=2)


def load_thresholds(path) -> CalibrationResult:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return CalibrationResult(
        d["thr_classifier"], d["thr_prior"], d["precision"], d["recall"],
        d["achieved_target"], d.get("grid_points", 101))
