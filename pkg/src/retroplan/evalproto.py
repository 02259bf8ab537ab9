"""Reaction labeling schema, path verdicts and scorer-comparison metrics.

Confidence is a four-tier ordered scale; every non-top tier carries one of
seven issue categories, the top tier pairs with "no problem". A route's
verdict is the minimum confidence over its steps. Binarization for
classifier evaluation treats the top tier as positive, the second tier as
excluded, the rest as negative.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

from .errors import IncompleteRoute, SingleClass, ValidationFailed


class Confidence(enum.IntEnum):
    NONSENSE = 0
    RATHER_NOT = 1
    WORTHWHILE = 2
    SAFE_BET = 3

    @property
    def wire(self) -> str:
        return self.name.lower()

    @staticmethod
    def from_wire(text: str) -> "Confidence":
        try:
            return Confidence[text.upper()]
        except KeyError:
            raise ValidationFailed(f"unknown confidence {text!r}") from None


class IssueCategory(enum.Enum):
    REACTANTS_MISMATCH = "reactants_mismatch"
    UNSTABLE = "unstable"
    MAGIC = "magic"
    ONE_POT = "one_pot"
    REACTIVITY = "reactivity"
    FUNCTIONAL_GROUP_INCOMPATIBILITY = "functional_group_incompatibility"
    SELECTIVITY = "selectivity"
    NO_PROBLEM = "no_problem"

    @staticmethod
    def from_wire(text: str) -> "IssueCategory":
        try:
            return IssueCategory(text)
        except ValueError:
            raise ValidationFailed(f"unknown category {text!r}") from None


SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ReactionAnnotation:
    reaction_id: str
    route_id: str
    step_index: int
    confidence: Confidence
    category: IssueCategory
    note: str = ""
    annotator: str = ""
    timestamp: str = ""
    protocol_step: int = 7  # 1-7, the review dimension reached

    def __post_init__(self):
        safe = self.confidence is Confidence.SAFE_BET
        clean = self.category is IssueCategory.NO_PROBLEM
        if safe != clean:
            raise ValidationFailed(
                "safe_bet and no_problem imply each other")
        if not (1 <= self.protocol_step <= 7):
            raise ValidationFailed("protocol_step must be in 1..7")
        if self.step_index < 0:
            raise ValidationFailed("step_index must be >= 0")

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "reaction_id": self.reaction_id,
            "route_id": self.route_id,
            "step_index": self.step_index,
            "confidence": self.confidence.wire,
            "category": self.category.value,
            "note": self.note,
            "annotator": self.annotator,
            "timestamp": self.timestamp,
            "protocol_step": self.protocol_step,
        }

    @staticmethod
    def from_json(d: dict) -> "ReactionAnnotation":
        return ReactionAnnotation(
            reaction_id=d["reaction_id"],
            route_id=d["route_id"],
            step_index=int(d["step_index"]),
            confidence=Confidence.from_wire(d["confidence"]),
            category=IssueCategory.from_wire(d["category"]),
            note=d.get("note", ""),
            annotator=d.get("annotator", ""),
            timestamp=d.get("timestamp", ""),
            protocol_step=int(d.get("protocol_step", 7)),
        )


@dataclass(frozen=True)
class PathVerdict:
    route_id: str
    verdict: Confidence
    counts: dict[str, int] = field(hash=False, default_factory=dict)


def path_verdict(annotations: list[ReactionAnnotation],
                 expected_steps: int | None = None) -> PathVerdict:
    """Minimum confidence over a fully annotated route."""
    if not annotations:
        raise IncompleteRoute("no annotations")
    route_ids = {a.route_id for a in annotations}
    if len(route_ids) != 1:
        raise IncompleteRoute(f"annotations span routes {sorted(route_ids)}")
    steps = {a.step_index for a in annotations}
    total = expected_steps if expected_steps is not None else len(steps)
    if steps != set(range(total)):
        raise IncompleteRoute(
            f"steps annotated {sorted(steps)} do not cover 0..{total - 1}")
    verdict = min(a.confidence for a in annotations)
    counts: dict[str, int] = {c.wire: 0 for c in Confidence}
    for a in annotations:
        counts[a.confidence.wire] += 1
    return PathVerdict(annotations[0].route_id, verdict, counts)


BINARIZE_POSITIVE = "positive"
BINARIZE_NEGATIVE = "negative"
BINARIZE_EXCLUDED = "excluded"


def binarize(annotations: list[ReactionAnnotation],
             ) -> list[tuple[str, str]]:
    """(reaction id, positive/negative/excluded) per annotation.

    Top tier is positive, second tier is excluded as borderline, the two
    lowest tiers are negative.
    """
    out = []
    for a in annotations:
        if a.confidence is Confidence.SAFE_BET:
            group = BINARIZE_POSITIVE
        elif a.confidence is Confidence.WORTHWHILE:
            group = BINARIZE_EXCLUDED
        else:
            group = BINARIZE_NEGATIVE
        out.append((a.reaction_id, group))
    return out


def roc_auc(scores: list[float], labels: list[int]) -> float:
    """Probability that a random positive outranks a random negative,
    ties counted half (rank formulation)."""
    n_pos = sum(1 for y in labels if y)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC-AUC needs both classes")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1  # 1-based average rank of the tie group
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    rank_sum = sum(r for r, y in zip(ranks, labels) if y)
    return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def pr_auc(scores: list[float], labels: list[int]) -> float:
    """Area under the precision-recall step curve, descending-score sweep
    with tie groups processed atomically.

    Degenerate all-positive input returns 1.0 (precision is 1 at every
    recall); all-negative input has no recall axis and raises SingleClass.
    """
    n_pos = sum(1 for y in labels if y)
    if n_pos == 0:
        raise SingleClass("PR-AUC needs at least one positive")
    if n_pos == len(labels):
        return 1.0
    pairs = sorted(zip(scores, labels), key=lambda t: -t[0])
    area = 0.0
    tp = fp = 0
    prev_recall = 0.0
    i = 0
    while i < len(pairs):
        j = i
        while j + 1 < len(pairs) and pairs[j + 1][0] == pairs[i][0]:
            j += 1
        for k in range(i, j + 1):
            if pairs[k][1]:
                tp += 1
            else:
                fp += 1
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return area


def per_category_auc(annotations: list[ReactionAnnotation],
                     scores: dict[str, float], category: IssueCategory,
                     ) -> dict:
    """ROC/PR AUC over {category negatives} vs {no-problem positives}.

    Worthwhile annotations stay excluded; sample sizes are reported
    alongside the curves' areas.
    """
    groups = dict(binarize(annotations))
    ys, xs = [], []
    for a in annotations:
        group = groups[a.reaction_id]
        if group == BINARIZE_POSITIVE:
            label = 1
        elif group == BINARIZE_NEGATIVE and a.category is category:
            label = 0
        else:
            continue
        if a.reaction_id not in scores:
            continue
        xs.append(scores[a.reaction_id])
        ys.append(label)
    n_pos = sum(ys)
    n_neg = len(ys) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(
            f"category {category.value}: {n_pos} positives, {n_neg} negatives")
    return {
        "category": category.value,
        "roc_auc": roc_auc(xs, ys),
        "pr_auc": pr_auc(xs, ys),
        "n_positive": n_pos,
        "n_negative": n_neg,
    }


def fp_overlap(fp_sets: dict[str, set[str]]) -> tuple[float, bool]:
    """|intersection| / min |set| over all scorers' false-positive sets.

    Returns (value, defined). All sets empty -> (nan, False); some set
    empty -> (0.0, True) since the intersection is then empty too.
    """
    if len(fp_sets) < 2:
        raise ValueError("need at least two scorers")
    sizes = [len(s) for s in fp_sets.values()]
    if all(n == 0 for n in sizes):
        return math.nan, False
    if min(sizes) == 0:
        return 0.0, True
    sets = iter(fp_sets.values())
    inter = set(next(sets))
    for s in sets:
        inter &= s
    return len(inter) / min(sizes), True


def fp_tn_counts_by_category(annotations: list[ReactionAnnotation],
                             predictions: dict[str, int]) -> list[dict]:
    """False-positive and true-negative counts per issue category.

    Only binarized negatives count; rows carry the category sample size.
    """
    groups = dict(binarize(annotations))
    rows: dict[str, dict] = {}
    for a in annotations:
        if groups[a.reaction_id] != BINARIZE_NEGATIVE:
            continue
        if a.reaction_id not in predictions:
            continue
        row = rows.setdefault(
            a.category.value,
            {"category": a.category.value, "n": 0,
             "false_positives": 0, "true_negatives": 0})
        row["n"] += 1
        if predictions[a.reaction_id]:
            row["false_positives"] += 1
        else:
            row["true_negatives"] += 1
    return sorted(rows.values(), key=lambda r: r["category"])


def load_annotations(path) -> list[ReactionAnnotation]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(ReactionAnnotation.from_json(json.loads(line)))
    return out


def append_annotation(path, annotation: ReactionAnnotation) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(annotation.to_json()) + "\n")
        fh.flush()
