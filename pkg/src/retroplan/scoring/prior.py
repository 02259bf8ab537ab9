"""Token-probability prior over reaction strings.

The neural sequence model is behind the TokenProbabilityModel interface;
the shipped realization is an order-k Markov model with additive
smoothing, which is deterministic, dependency-free and fast enough for
desk-scale corpora. Three scores are derived from per-token
log-probabilities: a sqrt-length-normalized sequence score, a mean over
reaction-center tokens, and a site-selectivity log-ratio that compares
the recorded outcome against alternative sites found by re-applying the
reaction's own template.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Protocol

from ..chem import Molecule, canonical_smiles
from ..errors import (
    EmptyCenter,
    EmptyCorpus,
    EmptySequence,
    NonPositiveComponent,
)
from ..reactions import Reaction, apply_template_forward, extract_template
from .tokenizer import (
    BOS,
    UNK,
    center_token_indices,
    serialize_parts,
    serialize_reaction,
    tokenize,
)


@dataclass(frozen=True)
class TokenScoreBreakdown:
    """Per-token log-probabilities plus the center-token index set."""

    tokens: tuple[tuple[str, float], ...]
    center_indices: frozenset[int]

    def __post_init__(self):
        for tok, lp in self.tokens:
            if not (lp <= 0.0) or math.isinf(lp) or math.isnan(lp):
                raise ValueError(f"log-probability of {tok!r} not finite <= 0")
        if any(i < 0 or i >= len(self.tokens) for i in self.center_indices):
            raise ValueError("center index out of range")

    @property
    def total_tokens(self) -> int:
        return len(self.tokens)

    @property
    def center_count(self) -> int:
        return len(self.center_indices)

    @property
    def total_logprob(self) -> float:
        return sum(lp for _, lp in self.tokens)


class TokenProbabilityModel(Protocol):
    """Contract: per-token conditional log-probabilities for a token list."""

    def token_logprobs(self, tokens: list[str]) -> list[float]: ...


def score_sequence(b: TokenScoreBreakdown) -> float:
    """Sum of log-probabilities normalized by sqrt of the token count."""
    if b.total_tokens == 0:
        raise EmptySequence("no tokens to score")
    return b.total_logprob / math.sqrt(b.total_tokens)


def score_center(b: TokenScoreBreakdown) -> float:
    """Mean log-probability over reaction-center tokens."""
    if b.center_count == 0:
        raise EmptyCenter("no center tokens")
    return sum(b.tokens[i][1] for i in b.center_indices) / b.center_count


@dataclass(frozen=True)
class SiteBreakdown:
    """Normalized outcome probabilities behind the selectivity score."""

    p_desired: float
    p_undesired: float
    alternatives: tuple[tuple[str, float], ...]
    epsilon: float


def _logsumexp(values: list[float]) -> float:
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def score_site_selectivity(model: TokenProbabilityModel, rxn: Reaction,
                           radius: int = 1, epsilon: float = 1e-6,
                           ) -> tuple[SiteBreakdown, float]:
    """log(P_desired / (P_undesired + eps)) over enumerated reaction sites.

    Alternatives come from applying the reaction's own extracted template
    forward at every other matching site of the reactants; probabilities
    are normalized over the enumerated outcome set.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    tpl = extract_template(rxn, radius)  # EmptyCenter propagates
    recorded = canonical_smiles(rxn.product)
    desired_lp = _total_logprob(model, rxn.reactants, rxn.product)
    alt: list[tuple[str, float]] = []
    for candidate in apply_template_forward(tpl, rxn.reactants):
        key = canonical_smiles(candidate)
        if key == recorded:
            continue
        alt.append((key, _total_logprob(model, rxn.reactants, candidate)))
    all_lps = [desired_lp] + [lp for _, lp in alt]
    lse = _logsumexp(all_lps)
    p_desired = math.exp(desired_lp - lse)
    alternatives = tuple((key, math.exp(lp - lse)) for key, lp in alt)
    p_undesired = sum(p for _, p in alternatives)
    score = math.log(p_desired) - math.log(p_undesired + epsilon)
    return SiteBreakdown(p_desired, p_undesired, alternatives, epsilon), score


def _total_logprob(model: TokenProbabilityModel,
                   reactants: tuple[Molecule, ...], product: Molecule) -> float:
    tokens = list(serialize_parts(reactants, product).tokens)
    return sum(model.token_logprobs(tokens))


@dataclass(frozen=True)
class PriorWeights:
    """Exponents of the three prior components (defaults for drug-like
    targets: 1, 1.5, 2.5)."""

    sequence: float = 1.0
    selectivity: float = 1.5
    center: float = 2.5

    def __post_init__(self):
        if min(self.sequence, self.selectivity, self.center) <= 0:
            raise ValueError("weights must be strictly positive")


def _log_sigmoid(x: float) -> float:
    # -softplus(-x), stable on both tails
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def combined_prior(sequence_score: float, selectivity_score: float,
                   center_score: float,
                   weights: PriorWeights = PriorWeights()) -> float:
    """Weighted product of the components, computed in log domain.

    Sequence and center scores are log-scale (<= 0) and map to (0, 1] by
    exp; the unbounded selectivity score maps through a sigmoid. Returns
    the log of the weighted product, a monotone equivalent of the product
    itself.
    """
    if sequence_score > 0 or center_score > 0:
        raise NonPositiveComponent(
            "sequence/center scores must be log-probabilities <= 0")
    return (weights.sequence * sequence_score
            + weights.selectivity * _log_sigmoid(selectivity_score)
            + weights.center * center_score)


def score_breakdown(model: TokenProbabilityModel,
                    rxn: Reaction) -> TokenScoreBreakdown:
    """Serialize, score every token, and mark the center tokens."""
    serialized = serialize_reaction(rxn)
    logprobs = model.token_logprobs(list(serialized.tokens))
    return TokenScoreBreakdown(
        tuple(zip(serialized.tokens, logprobs)),
        center_token_indices(rxn, serialized),
    )


# ---------------------------------------------------------------------------
# Markov baseline


class MarkovTokenModel:
    """Order-k token model with additive smoothing."""

    def __init__(self, order: int, smoothing: float, vocab: list[str],
                 counts: dict[tuple[str, ...], dict[str, int]],
                 meta: dict | None = None):
        self.order = order
        self.smoothing = smoothing
        self.vocab = sorted(set(vocab) | {UNK})
        self._vocab_set = set(self.vocab)
        self.counts = counts
        self.totals = {ctx: sum(c.values()) for ctx, c in counts.items()}
        self.meta = meta or {}

    def _norm(self, token: str) -> str:
        return token if token in self._vocab_set else UNK

    def token_logprobs(self, tokens: list[str]) -> list[float]:
        v = len(self.vocab)
        lam = self.smoothing
        out = []
        ctx = (BOS,) * self.order
        for token in tokens:
            tok = self._norm(token)
            bucket = self.counts.get(ctx)
            count = bucket.get(tok, 0) if bucket else 0
            total = self.totals.get(ctx, 0)
            out.append(math.log((count + lam) / (total + lam * v)))
            ctx = ctx[1:] + (tok,)
        return out

    def sequence_logprob(self, tokens: list[str]) -> float:
        return sum(self.token_logprobs(tokens))

    def to_json(self) -> dict:
        return {
            "format": "retroplan-markov-v1",
            "order": self.order,
            "smoothing": self.smoothing,
            "vocab": self.vocab,
            "counts": {
                "\x1f".join(ctx): dict(bucket)
                for ctx, bucket in sorted(self.counts.items())
            },
            "meta": self.meta,
        }

    @staticmethod
    def from_json(data: dict) -> "MarkovTokenModel":
        counts = {
            tuple(ctx.split("\x1f")): {t: int(n) for t, n in bucket.items()}
            for ctx, bucket in data["counts"].items()
        }
        return MarkovTokenModel(
            int(data["order"]), float(data["smoothing"]),
            list(data["vocab"]), counts, data.get("meta"))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)

    @staticmethod
    def load(path) -> "MarkovTokenModel":
        with open(path, encoding="utf-8") as fh:
            return MarkovTokenModel.from_json(json.load(fh))


def train_markov_model(sequences: list[str], order: int = 2,
                       smoothing: float = 0.05, holdout_fraction: float = 0.1,
                       seed: int = 0, corpus_hash: str = "",
                       ) -> MarkovTokenModel:
    """Fit the Markov baseline; held-out perplexity lands in model.meta."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if not sequences:
        raise EmptyCorpus("no training sequences")
    token_lists = [tokenize(s) for s in sequences]
    rng = random.Random(seed)
    indices = list(range(len(token_lists)))
    rng.shuffle(indices)
    n_holdout = int(len(indices) * holdout_fraction)
    holdout_idx = set(indices[:n_holdout])
    train = [token_lists[i] for i in indices[n_holdout:]]
    heldout = [token_lists[i] for i in sorted(holdout_idx)]
    if not train:
        train, heldout = token_lists, []

    vocab = sorted({t for seq in train for t in seq})
    counts: dict[tuple[str, ...], dict[str, int]] = {}
    for seq in train:
        ctx = (BOS,) * order
        for token in seq:
            bucket = counts.setdefault(ctx, {})
            bucket[token] = bucket.get(token, 0) + 1
            ctx = ctx[1:] + (token,)
    model = MarkovTokenModel(order, smoothing, vocab, counts)

    perplexity = None
    if heldout:
        lps = [lp for seq in heldout for lp in model.token_logprobs(seq)]
        if lps:
            perplexity = math.exp(-sum(lps) / len(lps))
    model.meta = {
        "heldout_perplexity": perplexity,
        "train_sequences": len(train),
        "heldout_sequences": len(heldout),
        "corpus_hash": corpus_hash,
        "seed": seed,
    }
    return model
