import random

import pytest
from oracles import brute_force_center

from retroplan.errors import NoMappedAtoms, ReactionInvariantError
from retroplan.reactions import (
    Reaction,
    Side,
    parse_reaction_smiles,
    reaction_center,
)


def test_identity_reaction_empty_center():
    rxn = parse_reaction_smiles("[CH3:1][OH:2]>>[CH3:1][OH:2]")
    assert reaction_center(rxn) == frozenset()


def test_esterification_center_matches_oracle():
    rxn = parse_reaction_smiles(
        "[CH3:5][C:1](=[O:2])[OH:3].[OH:4][CH3:6]"
        ">>[CH3:5][C:1](=[O:2])[O:4][CH3:6]")
    center = reaction_center(rxn)
    assert center == brute_force_center(rxn)
    # carbonyl C, leaving acid O, and the alcohol O that bonds to it
    product_side = {i for side, i in center if side is Side.PRODUCT}
    elements = {rxn.product.atoms[i].element for i in product_side}
    assert elements == {"C", "O"}


def test_unmapped_reaction_rejected():
    with pytest.raises(ReactionInvariantError):
        parse_reaction_smiles("CCO.CC(=O)O>>CC(=O)OCC")


def test_no_maps_at_all_raises():
    from retroplan.chem import parse_smiles
    from retroplan.reactions.reaction import Reaction

    rxn = Reaction.__new__(Reaction)
    object.__setattr__(rxn, "reactants", (parse_smiles("CCO"),))
    object.__setattr__(rxn, "product", parse_smiles("CC=O"))
    object.__setattr__(rxn, "source_id", "x")
    object.__setattr__(rxn, "reaction_class", "")
    object.__setattr__(rxn, "agents", ())
    with pytest.raises(NoMappedAtoms):
        reaction_center(rxn)


def test_oracle_agreement_on_corpus(corpus):
    for rxn in corpus:
        assert reaction_center(rxn) == brute_force_center(rxn), rxn.source_id


def test_center_invariant_under_map_relabeling(corpus):
    rng = random.Random(5)
    for rxn in corpus[:20]:
        maps = sorted(
            set(rxn.product.map_to_index) | set(rxn.reactant_maps))
        shuffled = maps[:]
        rng.shuffle(shuffled)
        relabel = dict(zip(maps, shuffled))

        def remap(mol):
            return mol.with_maps({
                idx: relabel[num]
                for num, idx in mol.map_to_index.items()
            })

        relabeled = Reaction(
            tuple(remap(m) for m in rxn.reactants), remap(rxn.product))
        assert reaction_center(relabeled) == reaction_center(rxn)
