import pytest

from retroplan.chem import parse_smiles, write_smiles
from retroplan.chem.mol import BondOrder
from retroplan.errors import (
    EmptyInput,
    InvalidCharge,
    UnbalancedBranch,
    UnclosedRingBond,
    UnknownElement,
)

# real drug-like strings exercising brackets, charges, stereo, fused rings
DRUG_LIKE = [
    "Clc1ccc(-c2c(N(CC)CC)c(c(nc2C)C)CC(=O)NCC)cc1",
    "O(c1cc(c([N+](=O)[O-])cc1)COC1CN(C(=O)[C@@H]2C[C@]3(NC(OC3)=O)C2)C1)C1CCCC1",
    "FC1(F)C(N2N=CC(=C2C)c2cc(ccc2)C#Cc2c(OC)cc(nc2)C(=O)O)C1",
    "P(=O)(O)(O)CO[C@H]1C(C=2N(N=CC2)C/C=C/c2ccccc2)CCCC1",
    "Fc1cc2c(OB(O)[C@@H](NC(=O)C3CC3)C2)cc1",
    "S(=O)(=O)(Nc1nc2N(N(C(=O)c2cn1)CC=C)C)c1ccc([C@@H](C2=Nc3c(N2)cccc3)CCO)cc1",
    "O=C(N1CC(N2C(=O)CNC(C2)C)C1)N[C@H]1C(=O)NC[C@@H]1c1ccc(N2C[C@@H](O)CC2)cc1",
]


def test_ethanol():
    mol = parse_smiles("CCO")
    assert len(mol.atoms) == 3
    assert len(mol.bonds) == 2
    assert [a.element for a in mol.atoms] == ["C", "C", "O"]
    assert [a.hydrogens for a in mol.atoms] == [3, 2, 1]
    assert all(b.order is BondOrder.SINGLE for b in mol.bonds)


def test_ring_closure():
    mol = parse_smiles("C1CC1")
    assert len(mol.atoms) == 3
    assert len(mol.bonds) == 3


def test_percent_ring_closure():
    mol = parse_smiles("C%10CC%10")
    assert len(mol.bonds) == 3


def test_bracket_atoms_with_maps():
    mol = parse_smiles("[CH3:1][OH:2]")
    assert [a.map_number for a in mol.atoms] == [1, 2]
    assert [a.hydrogens for a in mol.atoms] == [3, 1]


def test_charges():
    mol = parse_smiles("[NH4+].[O-]C(=O)C")
    assert mol.atoms[0].charge == 1
    assert mol.atoms[1].charge == -1
    assert len(mol.fragments()) == 2


def test_aromatic_hydrogens():
    benzene = parse_smiles("c1ccccc1")
    assert [a.hydrogens for a in benzene.atoms] == [1] * 6
    pyridine = parse_smiles("c1ccncc1")
    n = next(a for a in pyridine.atoms if a.element == "N")
    assert n.hydrogens == 0
    furan = parse_smiles("c1ccoc1")
    o = next(a for a in furan.atoms if a.element == "O")
    assert o.hydrogens == 0


def test_unbalanced_branch_offset():
    with pytest.raises(UnbalancedBranch) as err:
        parse_smiles("C(C")
    assert err.value.offset == 3


def test_unmatched_close_paren():
    with pytest.raises(UnbalancedBranch) as err:
        parse_smiles("CC)C")
    assert err.value.offset == 2


def test_unclosed_ring():
    with pytest.raises(UnclosedRingBond) as err:
        parse_smiles("C1CC")
    assert err.value.offset == 4


def test_unknown_element():
    with pytest.raises(UnknownElement):
        parse_smiles("C[Xx]C")
    with pytest.raises(UnknownElement):
        parse_smiles("CEC")


def test_invalid_charge():
    with pytest.raises(InvalidCharge):
        parse_smiles("[C+16]")


def test_empty_input():
    with pytest.raises(EmptyInput) as err:
        parse_smiles("")
    assert err.value.offset == 0


def test_stereo_is_preserved_opaquely():
    mol = parse_smiles("N[C@@H](C)C(=O)O")
    out = write_smiles(mol)
    assert "@@" in out
    again = parse_smiles(out)
    assert [a.chirality for a in again.atoms] == [a.chirality for a in mol.atoms]


def test_directional_bonds_round_trip():
    mol = parse_smiles("C/C=C/C")
    out = write_smiles(mol)
    reparsed = parse_smiles(out)
    dirs = [b.direction for b in reparsed.bonds if b.direction]
    assert len(dirs) == 2


@pytest.mark.parametrize("smi", DRUG_LIKE)
def test_drug_like_round_trip(smi):
    mol = parse_smiles(smi)
    out = write_smiles(mol)
    again = parse_smiles(out)
    assert _iso_fingerprint(mol) == _iso_fingerprint(again)


def _iso_fingerprint(mol):
    """Order-independent structural summary used as an isomorphism proxy."""
    from retroplan.chem import canonical_smiles

    return canonical_smiles(mol, include_maps=True)
