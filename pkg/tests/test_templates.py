import pytest

from retroplan.chem import canonical_smiles, parse_smiles
from retroplan.errors import NoMappedAtoms
from retroplan.reactions import (
    TemplateLibrary,
    apply_template_forward,
    apply_template_retro,
    extract_template,
    find_embeddings,
    parse_reaction_smiles,
    parse_template,
    reaction_center,
)

ESTER = parse_reaction_smiles(
    "[CH3:7][CH2:5][C:1](=[O:2])[OH:3].[OH:4][CH2:6][CH3:8]"
    ">>[CH3:7][CH2:5][C:1](=[O:2])[O:4][CH2:6][CH3:8]")


def reactant_key(mols):
    return sorted(canonical_smiles(m) for m in mols)


def test_radius_zero_contains_only_center_atoms():
    tpl = extract_template(ESTER, radius=0)
    center = reaction_center(ESTER)
    n_product_center = sum(1 for side, _ in center if side.value == "p")
    concrete = [a for a in tpl.product_side.atoms if a.element != "*"]
    assert len(concrete) == n_product_center


def test_identical_chemistry_identical_keys():
    other = parse_reaction_smiles(
        "[CH3:17][CH2:15][C:11](=[O:12])[OH:13].[OH:14][CH2:16][CH3:18]"
        ">>[CH3:17][CH2:15][C:11](=[O:12])[O:14][CH2:16][CH3:18]")
    assert extract_template(ESTER, 1).key == extract_template(other, 1).key


def test_different_r_groups_same_radius1_key():
    bulky = parse_reaction_smiles(
        "[CH3:9][CH2:10][CH2:7][CH2:5][C:1](=[O:2])[OH:3]."
        "[OH:4][CH2:6][CH3:8]"
        ">>[CH3:9][CH2:10][CH2:7][CH2:5][C:1](=[O:2])[O:4][CH2:6][CH3:8]")
    assert extract_template(ESTER, 1).key == extract_template(bulky, 1).key


def test_large_radius_covers_whole_reaction():
    tpl = extract_template(ESTER, radius=10)
    assert all(a.element != "*" for a in tpl.product_side.atoms)
    assert len(tpl.product_side.atoms) == len(ESTER.product.atoms)


def test_empty_center_raises():
    rxn = parse_reaction_smiles("[CH3:1][OH:2]>>[CH3:1][OH:2]")
    with pytest.raises(NoMappedAtoms):
        extract_template(rxn, 1)


def test_retro_round_trip_recovers_reactants():
    tpl = extract_template(ESTER, radius=1)
    candidates = apply_template_retro(tpl, ESTER.product)
    assert reactant_key(ESTER.reactants) in \
        [reactant_key(c) for c in candidates]


def test_no_match_gives_empty_list():
    tpl = extract_template(ESTER, radius=1)
    assert apply_template_retro(tpl, parse_smiles("CCCC")) == []


def test_symmetric_product_embeddings_dedup():
    # benzene-1,4-diyl diacetate: two equivalent ester sites
    tpl = extract_template(ESTER, radius=0)
    product = parse_smiles("CC(=O)OCc1ccc(COC(C)=O)cc1")
    embeddings = find_embeddings(tpl.product_side, product)
    assert len(embeddings) >= 2
    candidates = apply_template_retro(tpl, product)
    keys = [reactant_key(c) for c in candidates]
    assert len(keys) == len({tuple(k) for k in keys})


def test_forward_application_recovers_product():
    tpl = extract_template(ESTER, radius=1)
    outcomes = apply_template_forward(tpl, ESTER.reactants)
    assert canonical_smiles(ESTER.product) in \
        [canonical_smiles(m) for m in outcomes]


def test_forward_non_matching_reactants_empty():
    tpl = extract_template(ESTER, radius=1)
    assert apply_template_forward(tpl, [parse_smiles("CCCC")]) == []


def test_forward_multiple_sites_multiple_candidates():
    tpl = extract_template(ESTER, radius=1)
    diol = parse_smiles("OCCCCO")
    acid = parse_smiles("CCC(=O)O")
    outcomes = apply_template_forward(tpl, [acid, diol])
    assert len(outcomes) >= 1
    # asymmetric diol: two distinguishable sites
    asym = parse_smiles("OCCC(C)CCCO")
    outcomes2 = apply_template_forward(tpl, [acid, asym])
    assert len(outcomes2) == 2


def test_template_string_round_trip():
    tpl = extract_template(ESTER, radius=1)
    again = parse_template(tpl.key, tpl.radius, 5)
    assert again.key == tpl.key
    assert again.popularity == 5
    assert [reactant_key(c) for c in apply_template_retro(again, ESTER.product)] == \
        [reactant_key(c) for c in apply_template_retro(tpl, ESTER.product)]


def test_library_round_trip(tmp_path, corpus, library):
    path = tmp_path / "templates.txt"
    library.save(path)
    again = TemplateLibrary.load(path)
    assert [(t.key, t.popularity) for t in again] == \
        [(t.key, t.popularity) for t in library]


def test_extraction_round_trip_rate_on_corpus(corpus):
    ok = total = 0
    for rxn in corpus:
        tpl = extract_template(rxn, radius=1)
        total += 1
        recorded = reactant_key(rxn.reactants)
        candidates = apply_template_retro(tpl, rxn.product)
        ok += recorded in [reactant_key(c) for c in candidates]
    assert ok / total >= 0.9, f"round-trip rate {ok}/{total}"
