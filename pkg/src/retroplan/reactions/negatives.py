"""Synthetic negative reactions for classifier training.

Two corruption modes:
  forward - re-react a positive's reactants with a random template and keep
            outcomes whose product differs from the recorded one
            (wrong-main-product, selectivity-style negatives);
  retro2  - apply two random retro templates in sequence to a corpus
            product and emit (final reactant set -> original product),
            discarding the intermediate (functional-group-incompatibility
            style negatives).
"""

from __future__ import annotations

import random

from ..chem import canonical_smiles
from ..errors import InsufficientMatches, ReactionInvariantError
from .reaction import Reaction
from .templates import (
    ReactionTemplate,
    TemplateLibrary,
    apply_template_forward,
    apply_template_retro,
    combine_molecules,
)

ATTEMPT_FACTOR = 50


def _forward_negatives(rng: random.Random, corpus: list[Reaction],
                       templates: list[ReactionTemplate]) -> list[Reaction]:
    rxn = rng.choice(corpus)
    tpl = rng.choice(templates)
    recorded = canonical_smiles(rxn.product)
    out = []
    for candidate in apply_template_forward(tpl, rxn.reactants):
        if canonical_smiles(candidate) == recorded:
            continue
        try:
            out.append(Reaction(rxn.reactants, candidate,
                                source_id=f"neg-fwd-{rxn.source_id}",
                                reaction_class="negative/forward"))
        except ReactionInvariantError:
            continue
    return out


def _retro2_negatives(rng: random.Random, corpus: list[Reaction],
                      templates: list[ReactionTemplate]) -> list[Reaction]:
    rxn = rng.choice(corpus)
    first = rng.choice(templates)
    step1 = apply_template_retro(first, rxn.product)
    if not step1:
        return []
    intermediate = step1[rng.randrange(len(step1))]
    second = rng.choice(templates)
    # the second template applies anywhere in the intermediate set; the
    # intermediate itself is discarded, only the endpoints are kept
    out = []
    for final in apply_template_retro(second, combine_molecules(intermediate)):
        try:
            out.append(Reaction(tuple(final), rxn.product,
                                source_id=f"neg-r2-{rxn.source_id}",
                                reaction_class="negative/retro2"))
        except ReactionInvariantError:
            continue
    return out


def generate_negatives(corpus: list[Reaction], templates: TemplateLibrary,
                       mode: str, count: int, seed: int) -> list[Reaction]:
    """Produce ``count`` distinct negatives never equal to any positive.

    Deduplication is by map-stripped canonical reaction key, against the
    positives and within the generated set. Raises InsufficientMatches when
    the attempt budget (50x count) runs out first.
    """
    if not corpus or not len(templates):
        raise InsufficientMatches("empty corpus or template library")
    if mode not in ("forward", "retro2"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    tpl_list = list(templates)
    make = _forward_negatives if mode == "forward" else _retro2_negatives
    positives = {rxn.canonical_key for rxn in corpus}
    seen: set[str] = set()
    out: list[Reaction] = []
    budget = ATTEMPT_FACTOR * count
    for attempt in range(budget):
        if len(out) >= count:
            break
        for neg in make(rng, corpus, tpl_list):
            if len(out) >= count:
                break
            key = neg.canonical_key
            if key in positives or key in seen:
                continue
            seen.add(key)
            out.append(Reaction(neg.reactants, neg.product,
                                source_id=f"{neg.source_id}-{len(out):05d}",
                                reaction_class=neg.reaction_class))
    if len(out) < count:
        raise InsufficientMatches(
            f"only {len(out)}/{count} negatives within {budget} attempts")
    return out
