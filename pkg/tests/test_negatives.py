import pytest

from retroplan.errors import InsufficientMatches
from retroplan.reactions import (
    TemplateLibrary,
    extract_template,
    generate_negatives,
    parse_reaction_smiles,
)


def test_deterministic_given_seed(corpus, library):
    a = generate_negatives(corpus, library, "forward", 20, seed=3)
    b = generate_negatives(corpus, library, "forward", 20, seed=3)
    assert [r.canonical_key for r in a] == [r.canonical_key for r in b]


def test_different_seeds_differ(corpus, library):
    a = generate_negatives(corpus, library, "forward", 20, seed=3)
    b = generate_negatives(corpus, library, "forward", 20, seed=4)
    assert [r.canonical_key for r in a] != [r.canonical_key for r in b]


@pytest.mark.parametrize("mode", ["forward", "retro2"])
def test_no_overlap_with_positives(corpus, library, mode):
    negatives = generate_negatives(corpus, library, mode, 12, seed=9)
    assert len(negatives) == 12
    positive_keys = {r.canonical_key for r in corpus}
    assert not positive_keys & {n.canonical_key for n in negatives}
    # and no duplicates among the negatives themselves
    keys = [n.canonical_key for n in negatives]
    assert len(keys) == len(set(keys))


def test_single_site_substrate_yields_nothing():
    # the recorded template applied to a single-site substrate can only
    # reproduce the recorded product, which the dedup rule filters out
    rxn = parse_reaction_smiles(
        "[CH3:1][C:2](=[O:3])[OH:4].[OH:5][CH3:6]"
        ">>[CH3:1][C:2](=[O:3])[O:5][CH3:6]")
    library = TemplateLibrary([extract_template(rxn, 1)])
    with pytest.raises(InsufficientMatches):
        generate_negatives([rxn], library, "forward", 1, seed=0)


def test_insufficient_matches_reports_shortfall(corpus, library):
    with pytest.raises(InsufficientMatches):
        generate_negatives(corpus[:3], library, "forward", 500, seed=0)


def test_labels_and_ids(corpus, library):
    negatives = generate_negatives(corpus, library, "retro2", 10, seed=2)
    assert all(n.reaction_class == "negative/retro2" for n in negatives)
    assert len({n.source_id for n in negatives}) == len(negatives)
