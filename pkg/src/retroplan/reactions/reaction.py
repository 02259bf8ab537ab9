"""Atom-mapped reactions and reaction-center extraction.

A reaction center is every mapped atom whose bonding changed between the
reactant and product sides: a bond to a mapped neighbor formed, broke or
changed order, a hydrogen-count or charge change, or an atom present on
one side only. Unmapped reactant atoms are spectators and never enter the
center.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

from ..chem import Molecule, canonical_smiles, parse_smiles, write_smiles
from ..errors import NoMappedAtoms, ReactionInvariantError, SmilesParseError


class Side(enum.Enum):
    REACTANT = "r"
    PRODUCT = "p"


@dataclass(frozen=True)
class Reaction:
    reactants: tuple[Molecule, ...]
    product: Molecule
    source_id: str = ""
    reaction_class: str = ""
    agents: tuple[str, ...] = ()

    def __post_init__(self):
        seen: set[int] = set()
        for mol in self.reactants:
            for num in mol.map_to_index:
                if num in seen:
                    raise ReactionInvariantError(
                        f"map number {num} repeated across reactants")
                seen.add(num)
        if not self.product.map_to_index:
            raise ReactionInvariantError("product has no mapped atoms")

    @cached_property
    def reactant_offsets(self) -> tuple[int, ...]:
        offsets = []
        total = 0
        for mol in self.reactants:
            offsets.append(total)
            total += len(mol.atoms)
        return tuple(offsets)

    def reactant_atom(self, flat_index: int) -> tuple[int, int]:
        """Flat reactant-side index -> (molecule index, atom index)."""
        for mi in range(len(self.reactants) - 1, -1, -1):
            if flat_index >= self.reactant_offsets[mi]:
                return mi, flat_index - self.reactant_offsets[mi]
        raise IndexError(flat_index)

    @cached_property
    def reactant_maps(self) -> dict[int, int]:
        """Map number -> flat reactant-side atom index."""
        out = {}
        for mi, mol in enumerate(self.reactants):
            base = self.reactant_offsets[mi]
            for num, idx in mol.map_to_index.items():
                out[num] = base + idx
        return out

    def smiles(self, mapped: bool = True) -> str:
        left = ".".join(write_smiles(m, include_maps=mapped)
                        for m in self.reactants)
        right = write_smiles(self.product, include_maps=mapped)
        return f"{left}>>{right}"

    @cached_property
    def canonical_key(self) -> str:
        """Map-stripped canonical reaction string, for dedup and ordering."""
        left = ".".join(sorted(canonical_smiles(m) for m in self.reactants))
        return f"{left}>>{canonical_smiles(self.product)}"


def parse_reaction_smiles(text: str, source_id: str = "",
                          reaction_class: str = "") -> Reaction:
    """Parse 'reactants>agents>product' or 'reactants>>product'."""
    parts = text.split(">")
    if len(parts) != 3:
        raise SmilesParseError("reaction must have two '>' separators", 0)
    left, agents, right = parts
    if not left or not right:
        raise SmilesParseError("reaction needs reactants and a product", 0)
    reactants = tuple(parse_smiles(s) for s in left.split("."))
    product = parse_smiles(right)
    agent_list = tuple(s for s in agents.split(".") if s)
    return Reaction(reactants, product, source_id, reaction_class, agent_list)


def _mapped_neighbor_profile(mol: Molecule, idx: int) -> frozenset[tuple[int, str]]:
    out = []
    for v, bond in mol.neighbors[idx]:
        num = mol.atoms[v].map_number
        if num is not None:
            out.append((num, bond.order.value))
    return frozenset(out)


def reaction_center(rxn: Reaction) -> frozenset[tuple[Side, int]]:
    """Changed atoms as (side, flat atom index) pairs.

    Raises NoMappedAtoms when neither side carries a map number (the
    Reaction constructor already guarantees a mapped product, so this only
    fires for hand-built degenerate inputs).
    """
    product_maps = rxn.product.map_to_index
    reactant_maps = rxn.reactant_maps
    if not product_maps and not reactant_maps:
        raise NoMappedAtoms("reaction has no atom maps")
    center: set[tuple[Side, int]] = set()

    for num, p_idx in product_maps.items():
        r_flat = reactant_maps.get(num)
        if r_flat is None:
            center.add((Side.PRODUCT, p_idx))
            continue
        mi, r_idx = rxn.reactant_atom(r_flat)
        r_mol = rxn.reactants[mi]
        p_atom = rxn.product.atoms[p_idx]
        r_atom = r_mol.atoms[r_idx]
        if (p_atom.hydrogens != r_atom.hydrogens
                or p_atom.charge != r_atom.charge
                or _mapped_neighbor_profile(rxn.product, p_idx)
                != _mapped_neighbor_profile(r_mol, r_idx)):
            center.add((Side.PRODUCT, p_idx))
            center.add((Side.REACTANT, r_flat))

    for num, r_flat in reactant_maps.items():
        if num not in product_maps:
            center.add((Side.REACTANT, r_flat))

    # unmapped product atoms have no reactant counterpart by definition
    for idx, atom in enumerate(rxn.product.atoms):
        if atom.map_number is None:
            center.add((Side.PRODUCT, idx))

    return frozenset(center)


def load_corpus(path) -> tuple[list[Reaction], list[dict]]:
    """Read a reaction-per-line corpus file.

    Line format: 'reactants>agents>product' optionally followed by
    tab-separated id and class columns. Parse failures are collected into
    the returned report instead of aborting the load.
    """
    reactions: list[Reaction] = []
    report: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            rid = cols[1] if len(cols) > 1 else f"line-{lineno}"
            rclass = cols[2] if len(cols) > 2 else ""
            try:
                reactions.append(
                    parse_reaction_smiles(cols[0], rid, rclass))
            except Exception as err:  # noqa: BLE001 - reported, not fatal
                report.append({"line": lineno, "error": str(err)})
    return reactions, report


def write_corpus(path, reactions: list[Reaction]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rxn in reactions:
            fh.write(f"{rxn.smiles()}\t{rxn.source_id}\t{rxn.reaction_class}\n")
