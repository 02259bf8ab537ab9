"""Supported element table for drug-like corpora.

Anything outside this table raises UnknownElement at parse time. Valence
caps are deliberately loose maxima (the invariant is "does not exceed"),
adjusted by |charge| so that species like ammonium or tetrafluoroborate
construct cleanly.
"""

from __future__ import annotations

# element -> max total valence for the neutral atom
MAX_VALENCE = {
    "H": 1,
    "Li": 1,
    "Na": 1,
    "K": 1,
    "Cs": 1,
    "Mg": 2,
    "Ca": 2,
    "Ba": 2,
    "Zn": 2,
    "B": 3,
    "Al": 3,
    "C": 4,
    "Si": 4,
    "Sn": 4,
    "N": 3,
    "P": 5,
    "As": 5,
    "O": 2,
    "S": 6,
    "Se": 6,
    "F": 1,
    "Cl": 3,
    "Br": 3,
    "I": 3,
    "Fe": 6,
    "Cu": 4,
    "Mn": 6,
    "Ni": 4,
    "Co": 6,
    "Pd": 4,
    "Pt": 4,
    "Ag": 2,
    "Au": 3,
}

# wildcard pattern atom, used by reaction templates; exempt from valence checks
WILDCARD = "*"

SUPPORTED_ELEMENTS = frozenset(MAX_VALENCE) | {WILDCARD}

# elements writable without brackets, and their implicit-H valence ladders
ORGANIC_SUBSET = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

# lowercase aromatic symbols accepted outside brackets
AROMATIC_ORGANIC = frozenset({"b", "c", "n", "o", "p", "s"})

# aromatic symbols accepted inside brackets
AROMATIC_BRACKET = frozenset({"b", "c", "n", "o", "p", "s", "se", "as"})


def max_valence(element: str, charge: int) -> int | None:
    """Valence cap for an element at a given formal charge; None = unchecked."""
    if element == WILDCARD:
        return None
    base = MAX_VALENCE.get(element)
    if base is None:
        return None
    return base + abs(charge)


def implicit_hydrogens(element: str, aromatic: bool, bond_sum: int) -> int:
    """Implicit H count for an organic-subset atom written without brackets.

    ``bond_sum`` counts single=1 double=2 triple=3 aromatic=1; an aromatic
    atom consumes one extra unit, matching the as-written reading of
    lowercase atoms (benzene carbons get 1 H, fused carbons 0).
    """
    ladder = ORGANIC_SUBSET.get(element)
    if ladder is None:
        return 0
    used = bond_sum + (1 if aromatic else 0)
    for valence in ladder:
        if used <= valence:
            return valence - used
    return 0
