"""Immutable molecular graphs.

A Molecule is a simple undirected graph of heavy atoms with per-atom
hydrogen counts. Structural invariants (index validity, simple graph,
unique map numbers, valence caps) are enforced at construction; every
operation on a Molecule is pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import cached_property

from ..errors import MoleculeInvariantError, ValenceExceeded
from .elements import SUPPORTED_ELEMENTS, WILDCARD, max_valence


class BondOrder(enum.Enum):
    SINGLE = "-"
    DOUBLE = "="
    TRIPLE = "#"
    AROMATIC = ":"

    @property
    def h_units(self) -> int:
        """Contribution used for implicit-H inference (aromatic counts 1)."""
        return {"-": 1, "=": 2, "#": 3, ":": 1}[self.value]


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    hydrogens: int = 0
    aromatic: bool = False
    isotope: int | None = None
    map_number: int | None = None
    # opaque stereo annotation ("@" / "@@"); preserved, never interpreted
    chirality: str | None = None


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE
    # opaque cis/trans annotation ("/" or "\\"), stored relative to a->b
    direction: str | None = None

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...] = ()
    bonds: tuple[Bond, ...] = ()

    def __post_init__(self):
        n = len(self.atoms)
        seen_pairs = set()
        seen_maps = set()
        for atom in self.atoms:
            if atom.element not in SUPPORTED_ELEMENTS:
                raise MoleculeInvariantError(f"unsupported element {atom.element!r}")
            if atom.hydrogens < 0:
                raise MoleculeInvariantError("negative hydrogen count")
            if atom.map_number is not None:
                if atom.map_number <= 0:
                    raise MoleculeInvariantError("map numbers must be positive")
                if atom.map_number in seen_maps:
                    raise MoleculeInvariantError(
                        f"duplicate map number {atom.map_number}"
                    )
                seen_maps.add(atom.map_number)
        valence = [0] * n
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise MoleculeInvariantError("bond endpoint out of range")
            if bond.a == bond.b:
                raise MoleculeInvariantError("self-loop bond")
            pair = (bond.a, bond.b) if bond.a < bond.b else (bond.b, bond.a)
            if pair in seen_pairs:
                raise MoleculeInvariantError(f"duplicate bond {pair}")
            seen_pairs.add(pair)
            # aromatic bonds count 1 so lone-pair donors (furan O, pyrrole N)
            # pass; this is a max-cap, not an exact valence model
            valence[bond.a] += bond.order.h_units
            valence[bond.b] += bond.order.h_units
        for i, atom in enumerate(self.atoms):
            cap = max_valence(atom.element, atom.charge)
            if cap is None:
                continue
            if valence[i] + atom.hydrogens > cap:
                raise ValenceExceeded(
                    f"atom {i} ({atom.element}, charge {atom.charge:+d}) exceeds "
                    f"max valence {cap}"
                )

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def neighbors(self) -> tuple[tuple[tuple[int, Bond], ...], ...]:
        adj: list[list[tuple[int, Bond]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.a].append((bond.b, bond))
            adj[bond.b].append((bond.a, bond))
        return tuple(tuple(x) for x in adj)

    @cached_property
    def h_bond_sums(self) -> tuple[int, ...]:
        """Per-atom bond sums used for implicit-H bookkeeping."""
        sums = [0] * len(self.atoms)
        for b in self.bonds:
            sums[b.a] += b.order.h_units
            sums[b.b] += b.order.h_units
        return tuple(sums)

    @cached_property
    def neighbor_orders(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per-atom (bond order ordinal, neighbor index) pairs."""
        ordinal = {"-": 0, "=": 1, "#": 2, ":": 3}
        return tuple(
            tuple((ordinal[bond.order.value], v) for v, bond in nbrs)
            for nbrs in self.neighbors
        )

    @cached_property
    def _derived(self) -> dict:
        """Cache for derived data (tokens, layouts, stripped copies)."""
        return {}

    @cached_property
    def map_to_index(self) -> dict[int, int]:
        return {
            a.map_number: i
            for i, a in enumerate(self.atoms)
            if a.map_number is not None
        }

    def bond_between(self, i: int, j: int) -> Bond | None:
        for k, bond in self.neighbors[i]:
            if k == j:
                return bond
        return None

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def fragments(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists, in index order."""
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                i = stack.pop()
                comp.append(i)
                for j, _ in self.neighbors[i]:
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
            comps.append(sorted(comp))
        return comps

    def without_maps(self) -> "Molecule":
        if not self.map_to_index:
            return self
        cached = self._derived.get("stripped")
        if cached is None:
            cached = Molecule(
                tuple(replace(a, map_number=None) for a in self.atoms),
                self.bonds,
            )
            self._derived["stripped"] = cached
        return cached

    def with_maps(self, mapping: dict[int, int | None]) -> "Molecule":
        """New molecule with map numbers overridden for the given atom indices."""
        atoms = list(self.atoms)
        for idx, num in mapping.items():
            atoms[idx] = replace(atoms[idx], map_number=num)
        return Molecule(tuple(atoms), self.bonds)

    def subgraph(self, indices: list[int]) -> tuple["Molecule", dict[int, int]]:
        """Induced subgraph; returns (molecule, old index -> new index)."""
        index_map = {old: new for new, old in enumerate(indices)}
        atoms = tuple(self.atoms[i] for i in indices)
        bonds = tuple(
            replace(b, a=index_map[b.a], b=index_map[b.b])
            for b in self.bonds
            if b.a in index_map and b.b in index_map
        )
        return Molecule(atoms, bonds), index_map


class MolBuilder:
    """Mutable accumulator for assembling or rewriting molecules.

    Atom deletion leaves holes that are compacted by ``finish()``, which
    returns the molecule together with the old->new index map.
    """

    def __init__(self, source: Molecule | None = None):
        self.atoms: list[Atom | None] = list(source.atoms) if source else []
        self._bonds: dict[tuple[int, int], Bond] = {}
        if source:
            for b in source.bonds:
                self._bonds[self._key(b.a, b.b)] = b

    @staticmethod
    def _key(i: int, j: int) -> tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def add_atom(self, atom: Atom) -> int:
        self.atoms.append(atom)
        return len(self.atoms) - 1

    def set_atom(self, i: int, **changes) -> None:
        atom = self.atoms[i]
        assert atom is not None
        self.atoms[i] = replace(atom, **changes)

    def remove_atom(self, i: int) -> None:
        self.atoms[i] = None
        for key in [k for k in self._bonds if i in k]:
            del self._bonds[key]

    def add_bond(self, i: int, j: int, order: BondOrder = BondOrder.SINGLE) -> None:
        self._bonds[self._key(i, j)] = Bond(min(i, j), max(i, j), order)

    def remove_bond(self, i: int, j: int) -> None:
        self._bonds.pop(self._key(i, j), None)

    def has_bond(self, i: int, j: int) -> bool:
        return self._key(i, j) in self._bonds

    def merge(self, other: Molecule) -> dict[int, int]:
        """Append another molecule's graph; returns its old->new index map."""
        offset = {}
        for i, atom in enumerate(other.atoms):
            offset[i] = self.add_atom(atom)
        for b in other.bonds:
            self.add_bond(offset[b.a], offset[b.b], b.order)
        return offset

    def finish(self) -> tuple[Molecule, dict[int, int]]:
        index_map = {}
        atoms = []
        for old, atom in enumerate(self.atoms):
            if atom is not None:
                index_map[old] = len(atoms)
                atoms.append(atom)
        bonds = []
        for (i, j), bond in sorted(self._bonds.items()):
            if i in index_map and j in index_map:
                bonds.append(
                    replace(bond, a=index_map[bond.a], b=index_map[bond.b])
                )
        return Molecule(tuple(atoms), tuple(bonds)), index_map
