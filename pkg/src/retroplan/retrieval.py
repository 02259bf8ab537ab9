"""Precedent retrieval: two-tier transformation-pattern clustering and the
log-count plausibility score.

The coarse key canonicalizes the connected components of the reaction
center (elements, charges, bond orders, cross-side correspondence; atom
aromaticity deliberately excluded so e.g. aryl and alkyl displacements
share a coarse cluster). The fine key extends every center atom with
aromatic-system and conjugated-double-bond membership flags, detected on
the atom's own side. Score = ln(unique references + 1).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

from .chem import Molecule
from .chem.mol import Atom, Bond, BondOrder
from .errors import DuplicateRecord
from .reactions import Reaction, Side, combine_molecules, reaction_center
from .reactions.templates import two_sided_key

NOOP_KEY = "no-op"


def conjugated_atoms(mol: Molecule) -> set[int]:
    """Atoms on an alternating double-single-double bond path.

    Aromatic bonds do not participate (aromaticity has its own flag);
    a lone double bond is not conjugation.
    """
    doubles_at: dict[int, list[Bond]] = {}
    for bond in mol.bonds:
        if bond.order is BondOrder.DOUBLE:
            doubles_at.setdefault(bond.a, []).append(bond)
            doubles_at.setdefault(bond.b, []).append(bond)
    out: set[int] = set()
    for bond in mol.bonds:
        if bond.order is not BondOrder.SINGLE:
            continue
        for d1 in doubles_at.get(bond.a, ()):
            for d2 in doubles_at.get(bond.b, ()):
                if d1 is d2:
                    continue
                out.update((d1.a, d1.b, d2.a, d2.b, bond.a, bond.b))
    return out


def _center_pattern(mol: Molecule, indices: list[int], fine: bool,
                    conjugated: set[int] | None) -> Molecule:
    """Induced center subgraph with retrieval-key atom payloads.

    Coarse payload: element + charge (aromatic flags erased, H dropped).
    Fine payload adds the two membership flags, encoded in the isotope
    slot (1 + aromatic*2 + conjugated) so the standard writer emits them.
    """
    index_map = {old: new for new, old in enumerate(indices)}
    atoms = []
    for old in indices:
        a = mol.atoms[old]
        isotope = None
        if fine:
            flags = 2 * int(a.aromatic) + int(old in (conjugated or set()))
            isotope = 1 + flags
        atoms.append(Atom(a.element, a.charge, 0, False, isotope,
                          a.map_number))
    bonds = []
    for bond in mol.bonds:
        if bond.a in index_map and bond.b in index_map:
            bonds.append(Bond(index_map[bond.a], index_map[bond.b], bond.order))
    return Molecule(tuple(atoms), tuple(bonds))


def _keys_for(rxn: Reaction, fine: bool) -> str:
    center = reaction_center(rxn)  # NoMappedAtoms propagates
    if not center:
        return NOOP_KEY
    p_idx = sorted(i for side, i in center if side is Side.PRODUCT)
    r_idx = sorted(i for side, i in center if side is Side.REACTANT)
    combined = combine_molecules(rxn.reactants)
    conj_p = conjugated_atoms(rxn.product) if fine else None
    conj_r = conjugated_atoms(combined) if fine else None
    left = _center_pattern(rxn.product, p_idx, fine, conj_p)
    right = _center_pattern(combined, r_idx, fine, conj_r)
    tier = "F" if fine else "C"
    return f"{tier}|{two_sided_key(left, right)}"


def coarse_key(rxn: Reaction) -> str:
    """Transformation-pattern key; empty centers get the reserved no-op key."""
    return _keys_for(rxn, fine=False)


def fine_key(rxn: Reaction) -> str:
    """Coarse pattern refined with aromatic/conjugation membership flags."""
    return _keys_for(rxn, fine=True)


@dataclass
class ReferenceIndex:
    coarse: dict[str, set[str]] = field(default_factory=dict)
    fine: dict[str, set[str]] = field(default_factory=dict)
    noop_ids: set[str] = field(default_factory=set)
    indexed_ids: set[str] = field(default_factory=set)
    corpus_size: int = 0
    corpus_hash: str = ""

    def add(self, rxn: Reaction) -> None:
        rid = rxn.source_id
        if rid in self.indexed_ids:
            raise DuplicateRecord(f"reaction id {rid!r} already indexed")
        ck = coarse_key(rxn)
        if ck == NOOP_KEY:
            self.noop_ids.add(rid)
        else:
            self.coarse.setdefault(ck, set()).add(rid)
            self.fine.setdefault(fine_key(rxn), set()).add(rid)
        self.indexed_ids.add(rid)
        self.corpus_size += 1

    def reference_ids(self, rxn: Reaction) -> set[str]:
        ck = coarse_key(rxn)
        if ck == NOOP_KEY:
            return set()
        ids = set(self.coarse.get(ck, ()))
        ids |= self.fine.get(fine_key(rxn), set())
        ids.discard(rxn.source_id)
        return ids


def build_index(corpus: list[Reaction],
                corpus_hash: str = "") -> tuple[ReferenceIndex, list[dict]]:
    """Index every reaction under both keys; per-record failures are
    collected into the report rather than aborting the build."""
    index = ReferenceIndex(corpus_hash=corpus_hash)
    report: list[dict] = []
    seen_ids: set[str] = set()
    for rxn in corpus:
        if rxn.source_id in seen_ids:
            raise DuplicateRecord(f"duplicate reaction id {rxn.source_id!r}")
        seen_ids.add(rxn.source_id)
        try:
            index.add(rxn)
        except DuplicateRecord:
            raise
        except Exception as err:  # noqa: BLE001 - reported, not fatal
            report.append({"id": rxn.source_id, "error": str(err)})
    return index, report


def reference_count(rxn: Reaction, index: ReferenceIndex) -> int:
    """Unique references in the union of the coarse and fine clusters,
    excluding the query itself when indexed."""
    return len(index.reference_ids(rxn))


def precedent_score(rxn: Reaction, index: ReferenceIndex) -> float:
    """ln(reference count + 1); 0 exactly when there is no precedent."""
    return math.log(reference_count(rxn, index) + 1)


def corpus_file_hash(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def save_index(path, index: ReferenceIndex) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# retroplan reference-index v1 "
                 f"corpus_hash={index.corpus_hash} "
                 f"size={index.corpus_size}\n")
        for tier, table in (("C", index.coarse), ("F", index.fine)):
            for key in sorted(table):
                ids = ",".join(sorted(table[key]))
                fh.write(f"{tier}\t{key}\t{ids}\n")
        if index.noop_ids:
            fh.write(f"N\t{NOOP_KEY}\t{','.join(sorted(index.noop_ids))}\n")


def load_index(path) -> ReferenceIndex:
    index = ReferenceIndex()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        for part in header.split():
            if part.startswith("corpus_hash="):
                index.corpus_hash = part.split("=", 1)[1]
            elif part.startswith("size="):
                index.corpus_size = int(part.split("=", 1)[1])
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            tier, key, ids = line.split("\t")
            id_set = set(ids.split(",")) if ids else set()
            if tier == "C":
                index.coarse[key] = id_set
            elif tier == "F":
                index.fine[key] = id_set
            else:
                index.noop_ids = id_set
    for ids in index.coarse.values():
        index.indexed_ids |= ids
    index.indexed_ids |= index.noop_ids
    return index
