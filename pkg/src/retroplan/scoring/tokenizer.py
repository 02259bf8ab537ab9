"""Reaction-string tokenization at SMILES-character-cluster granularity.

Bracket atoms, two-letter halogens, %nn ring closures and the '>>' arrow
are single tokens; everything else is one character per token. The
serializer also reports which token each atom landed in, so center atoms
can be traced through a scoring model.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..chem import Molecule, write_smiles_with_spans
from ..reactions import Reaction, Side, reaction_center

TOKEN_RE = re.compile(
    r"\[[^\]]*\]|>>|Cl|Br|%\d{2}|[A-Za-z0-9*=#:+\-/\\().>]")

BOS = "<s>"
UNK = "<unk>"


def tokenize(text: str) -> list[str]:
    tokens = TOKEN_RE.findall(text)
    if sum(len(t) for t in tokens) != len(text):
        leftover = re.sub(TOKEN_RE, "", text)
        raise ValueError(f"untokenizable characters {leftover!r}")
    return tokens


@dataclass(frozen=True)
class SerializedReaction:
    text: str
    tokens: tuple[str, ...]
    # (side value, flat atom index) -> token position
    atom_token: dict[tuple[str, int], int]


def serialize_parts(reactants: tuple[Molecule, ...] | list[Molecule],
                    product: Molecule) -> SerializedReaction:
    """Canonical map-free 'r1.r2>>p' string with an atom -> token map.

    Reactant fragments are ordered by their canonical strings so the
    serialization is a pure function of the reaction.
    """
    written = []
    for mi, mol in enumerate(reactants):
        stripped = mol.without_maps()
        smiles, spans = write_smiles_with_spans(
            stripped, canonical=True, include_maps=False)
        written.append((smiles, spans, mi))
    written.sort(key=lambda t: (t[0], t[2]))

    parts = []
    char_atom: dict[int, tuple[str, int]] = {}
    pos = 0
    for smiles, spans, mi in written:
        if parts:
            parts.append(".")
            pos += 1
        mol_base = sum(len(m.atoms) for m in reactants[:mi])
        for atom_idx, (start, _end) in enumerate(spans):
            char_atom[pos + start] = (Side.REACTANT.value, mol_base + atom_idx)
        parts.append(smiles)
        pos += len(smiles)
    parts.append(">>")
    pos += 2
    p_smiles, p_spans = write_smiles_with_spans(
        product.without_maps(), canonical=True, include_maps=False)
    for atom_idx, (start, _end) in enumerate(p_spans):
        char_atom[pos + start] = (Side.PRODUCT.value, atom_idx)
    parts.append(p_smiles)
    text = "".join(parts)

    tokens = tokenize(text)
    start_to_token = {}
    cursor = 0
    for ti, tok in enumerate(tokens):
        start_to_token[cursor] = ti
        cursor += len(tok)
    atom_token = {
        atom: start_to_token[start] for start, atom in char_atom.items()
    }
    return SerializedReaction(text, tuple(tokens), atom_token)


def serialize_reaction(rxn: Reaction) -> SerializedReaction:
    return serialize_parts(rxn.reactants, rxn.product)


def center_token_indices(rxn: Reaction,
                         serialized: SerializedReaction) -> frozenset[int]:
    """Token positions of the reaction-center atoms on both sides."""
    center = reaction_center(rxn)
    return frozenset(
        serialized.atom_token[(side.value, idx)] for side, idx in center)
