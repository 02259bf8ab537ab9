"""End-to-end reaction scoring: prior + classifier + precedent -> bundle."""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import EmptyCenter
from ..reactions import Reaction
from ..retrieval import ReferenceIndex, reference_count
from .meta import RankCalibrator, ScoreBundle, ensemble_accept, ensemble_score
from .plausibility import FingerprintClassifier
from .prior import (
    MarkovTokenModel,
    PriorWeights,
    combined_prior,
    score_breakdown,
    score_center,
    score_sequence,
    score_site_selectivity,
)


@dataclass
class ReactionScorer:
    """Scores one reaction with every signal and applies the thresholds.

    Reactions without a usable center (no-op transformations) get neutral
    center/selectivity components; they are rejected by the binary filter
    anyway because the no-op cluster never yields references.
    """

    token_model: MarkovTokenModel
    classifier: FingerprintClassifier
    index: ReferenceIndex
    calibrator: RankCalibrator
    weights: PriorWeights = PriorWeights()
    epsilon: float = 1e-6
    template_radius: int = 1
    thr_classifier: float = 0.5
    thr_prior: float = 0.5

    def __post_init__(self):
        self._cache: dict[tuple[str, float, float], ScoreBundle] = {}
        self._nref_cache: dict[str, int] = {}

    def score(self, rxn: Reaction) -> ScoreBundle:
        cache_key = (rxn.canonical_key, self.thr_classifier, self.thr_prior)
        hit = self._cache.get(cache_key)
        if hit is not None:
            return hit
        bundle = self._score_uncached(rxn)
        self._cache[cache_key] = bundle
        return bundle

    def _reference_count(self, rxn: Reaction) -> int:
        key = rxn.canonical_key
        n = self._nref_cache.get(key)
        if n is None:
            n = reference_count(rxn, self.index)
            self._nref_cache[key] = n
        return n

    def quick_reject(self, rxn: Reaction) -> bool:
        """Cheap pre-gate: a reaction without precedent can never pass the
        binary filter, whatever the model scores say."""
        return self._reference_count(rxn) == 0

    def _score_uncached(self, rxn: Reaction) -> ScoreBundle:
        breakdown = score_breakdown(self.token_model, rxn)
        seq = score_sequence(breakdown)
        try:
            cen = score_center(breakdown)
            _, sel = score_site_selectivity(
                self.token_model, rxn, self.template_radius, self.epsilon)
        except EmptyCenter:
            cen = 0.0
            sel = 0.0
        prior_log = combined_prior(seq, sel, cen, self.weights)
        prior_unit = self.calibrator.transform(prior_log)
        cls = self.classifier.score(rxn)
        n_ref = self._reference_count(rxn)
        return ScoreBundle(
            prior_score=prior_unit,
            prior_log=prior_log,
            sequence_score=seq,
            center_score=cen,
            selectivity_score=sel,
            classifier_score=cls,
            reference_count=n_ref,
            ensemble=ensemble_score(cls, prior_unit, n_ref),
            accepted=ensemble_accept(cls, prior_unit, n_ref,
                                     self.thr_classifier, self.thr_prior),
            thr_classifier=self.thr_classifier,
            thr_prior=self.thr_prior,
        )


def fit_calibrator(scorer_parts: tuple[MarkovTokenModel, PriorWeights, float, int],
                   reactions: list[Reaction]) -> RankCalibrator:
    """Rank-calibrate the raw prior against a reference batch."""
    model, weights, epsilon, radius = scorer_parts
    values = []
    for rxn in reactions:
        breakdown = score_breakdown(model, rxn)
        seq = score_sequence(breakdown)
        try:
            cen = score_center(breakdown)
            _, sel = score_site_selectivity(model, rxn, radius, epsilon)
        except EmptyCenter:
            cen, sel = 0.0, 0.0
        values.append(combined_prior(seq, sel, cen, weights))
    return RankCalibrator(values)


def dump_score_rows(path, rows: list[tuple[str, ScoreBundle]]) -> None:
    """One JSON record per reaction with all bundle fields."""
    with open(path, "w", encoding="utf-8") as fh:
        for rid, bundle in rows:
            record = {"reaction_id": rid}
            record.update(bundle.to_json())
            fh.write(json.dumps(record) + "\n")


def load_score_rows(path) -> list[tuple[str, ScoreBundle]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            rows.append((d["reaction_id"], ScoreBundle.from_json(d)))
    return rows
