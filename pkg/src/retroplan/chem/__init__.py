"""Molecular graphs, SMILES IO, canonicalization, fingerprints."""

from .canon import (
    canonical_rank,
    canonical_smiles,
    write_smiles,
    write_smiles_with_spans,
)
from .fingerprint import Fingerprint, circular_fingerprint, tanimoto
from .mol import Atom, Bond, BondOrder, MolBuilder, Molecule
from .smiles import parse_smiles

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "Fingerprint",
    "MolBuilder",
    "Molecule",
    "canonical_rank",
    "canonical_smiles",
    "circular_fingerprint",
    "parse_smiles",
    "tanimoto",
    "write_smiles",
    "write_smiles_with_spans",
]
