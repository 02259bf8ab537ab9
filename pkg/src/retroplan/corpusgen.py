"""Seeded synthetic reaction corpus for desk-scale runs.

Ten hand-built, fully atom-mapped reaction families are instantiated over
substituent pools. Each family is a small mapped prototype reaction plus
attachment points; substituents are grafted onto both sides consistently,
so map numbers stay correct by construction and substituent atoms never
enter the reaction center. The same machinery forward-composes multi-step
search targets from stock molecules via extracted templates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .chem import Molecule, canonical_smiles, parse_smiles
from .chem.mol import BondOrder, MolBuilder
from .reactions import (
    Reaction,
    apply_template_forward,
    extract_template,
    parse_reaction_smiles,
)


def attach_fragment(rxn: Reaction, at_map: int, frag: Molecule) -> Reaction:
    """Graft an unmapped fragment (attachment at its atom 0) onto the atom
    with the given map number, on every side where that atom appears.

    The attachment replaces one hydrogen; fragment atoms receive fresh map
    numbers shared across sides, keeping them out of the reaction center.
    """
    used = set(rxn.product.map_to_index)
    for mol in rxn.reactants:
        used.update(mol.map_to_index)
    base = max(used) + 1
    frag_maps = {i: base + i for i in range(len(frag.atoms))}

    def graft(mol: Molecule) -> Molecule:
        at = mol.map_to_index.get(at_map)
        if at is None:
            return mol
        builder = MolBuilder(mol)
        offset = builder.merge(frag)
        for old, new in offset.items():
            builder.set_atom(new, map_number=frag_maps[old])
        # the new bond replaces one hydrogen on each end
        builder.set_atom(at, hydrogens=mol.atoms[at].hydrogens - 1)
        builder.set_atom(offset[0], hydrogens=frag.atoms[0].hydrogens - 1)
        builder.add_bond(at, offset[0], BondOrder.SINGLE)
        out, _ = builder.finish()
        return out

    return Reaction(
        tuple(graft(m) for m in rxn.reactants), graft(rxn.product),
        rxn.source_id, rxn.reaction_class, rxn.agents)


@dataclass(frozen=True)
class Family:
    name: str
    prototype: str
    slots: tuple[int, ...]  # map numbers where substituents attach


FAMILIES = (
    Family("esterification",
           "[CH3:1][C:2](=[O:3])[OH:4].[OH:5][CH3:6]"
           ">>[CH3:1][C:2](=[O:3])[O:5][CH3:6]", (1, 6)),
    Family("amide_coupling",
           "[CH3:1][C:2](=[O:3])[OH:4].[NH2:5][CH3:6]"
           ">>[CH3:1][C:2](=[O:3])[NH:5][CH3:6]", (1, 6)),
    Family("n_alkylation",
           "[CH3:1][CH2:2][Br:3].[NH2:4][CH3:5]"
           ">>[CH3:1][CH2:2][NH:4][CH3:5]", (1, 5)),
    Family("etherification",
           "[CH3:1][CH2:2][Br:3].[OH:4][CH3:5]"
           ">>[CH3:1][CH2:2][O:4][CH3:5]", (1, 5)),
    Family("reductive_amination",
           "[CH3:1][CH:2]=[O:3].[NH2:4][CH3:5]"
           ">>[CH3:1][CH2:2][NH:4][CH3:5]", (1, 5)),
    Family("biaryl_coupling",
           "[cH:1]1[cH:2][cH:3][cH:4][cH:5][c:6]1[Br:7]."
           "[OH:8][B:9]([OH:10])[c:11]1[cH:12][cH:13][cH:14][cH:15][cH:16]1"
           ">>[cH:1]1[cH:2][cH:3][cH:4][cH:5][c:6]1"
           "[c:11]1[cH:12][cH:13][cH:14][cH:15][cH:16]1", (2, 13)),
    Family("snar_amination",
           "[cH:1]1[cH:2][cH:3][cH:4][c:5]([F:6])[n:7]1.[NH2:8][CH3:9]"
           ">>[cH:1]1[cH:2][cH:3][cH:4][c:5]([NH:8][CH3:9])[n:7]1", (3, 9)),
    Family("nitro_reduction",
           "[cH:1]1[cH:2][cH:3][cH:4][cH:5][c:6]1[N+:7](=[O:8])[O-:9]"
           ">>[cH:1]1[cH:2][cH:3][cH:4][cH:5][c:6]1[NH2:7]", (2,)),
    Family("boc_deprotection",
           "[CH3:1][NH:2][C:3](=[O:4])[O:5][C:6]([CH3:7])([CH3:8])[CH3:9]"
           ">>[CH3:1][NH2:2]", (1,)),
    Family("ester_hydrolysis",
           "[CH3:1][C:2](=[O:3])[O:4][CH3:5].[OH2:6]"
           ">>[CH3:1][C:2](=[O:3])[OH:6]", (1, 5)),
)

# substituent fragments, attachment at atom 0; mostly asymmetric on purpose
# (mirror-symmetric rings cost disproportionate canonicalization time)
R_ALKYL = ("C", "CC", "CCC", "CCCC", "CCOC", "CCF", "CCCF", "COC")
R_ARYL = ("c1ccccc1", "c1cccc(F)c1", "c1cccc(C)c1", "c1ccccn1",
          "c1cccnc1", "c1ccoc1", "c1ccsc1")
R_BENZYL = ("Cc1ccccc1", "Cc1ccco1", "CCc1cccnc1")
# second functional group on the tail: enables cross-family template
# matches (selectivity negatives) and real alternative reaction sites
R_TAIL_OH = ("CCO", "CCCO")
R_TAIL_N = ("CCN", "CCCN")
R_ANY = R_ALKYL + R_ARYL + R_BENZYL
R_CARBON_ONLY = R_ALKYL[:4] + R_ARYL + R_BENZYL

# per-family substituent pools for each slot (None = leave the methyl stub);
# tails are repeated to weight multi-site reactions up
SLOT_POOLS: dict[str, tuple[tuple[str, ...], ...]] = {
    "esterification": (R_ANY + R_TAIL_OH * 3, R_ALKYL + R_BENZYL + R_TAIL_OH * 4),
    "amide_coupling": (R_ANY + R_TAIL_OH * 3, R_ANY + R_TAIL_OH * 6),
    "n_alkylation": (R_CARBON_ONLY, R_ANY + R_TAIL_OH * 6),
    "etherification": (R_CARBON_ONLY, R_ALKYL + R_BENZYL + R_TAIL_N * 4),
    "reductive_amination": (R_CARBON_ONLY, R_ANY + R_TAIL_OH * 6),
    "biaryl_coupling": (R_ALKYL[:4] + R_BENZYL, R_ALKYL[:4] + R_BENZYL),
    "snar_amination": (R_ALKYL[:4], R_ANY + R_TAIL_OH * 6),
    "nitro_reduction": (R_ALKYL[:4] + R_BENZYL + ("CCOC",),),
    "boc_deprotection": (R_ANY + R_TAIL_OH * 3,),
    "ester_hydrolysis": (R_ANY + R_TAIL_OH * 2, R_ALKYL + R_BENZYL + R_TAIL_OH * 3),
}


def instantiate(family: Family, picks: tuple[str | None, ...],
                source_id: str) -> Reaction:
    rxn = parse_reaction_smiles(family.prototype, source_id, family.name)
    for at_map, frag_smiles in zip(family.slots, picks):
        if frag_smiles is None:
            continue
        rxn = attach_fragment(rxn, at_map, parse_smiles(frag_smiles))
    return rxn


def generate_corpus(n: int = 1000, seed: int = 7) -> list[Reaction]:
    """Deterministic corpus of ``n`` distinct mapped reactions."""
    rng = random.Random(seed)
    out: list[Reaction] = []
    seen: set[str] = set()
    attempts = 0
    while len(out) < n and attempts < 50 * n:
        attempts += 1
        family = FAMILIES[attempts % len(FAMILIES)]
        picks = tuple(
            None if rng.random() < 0.08 else rng.choice(pool)
            for pool in SLOT_POOLS[family.name]
        )
        rxn = instantiate(family, picks, f"fx-{len(out):05d}")
        key = rxn.canonical_key
        if key in seen:
            continue
        seen.add(key)
        out.append(rxn)
    return out


def corpus_stock(corpus: list[Reaction]) -> set[str]:
    """Canonical SMILES of every reactant molecule in the corpus."""
    stock: set[str] = set()
    for rxn in corpus:
        for mol in rxn.reactants:
            stock.add(canonical_smiles(mol))
    return stock


# ---------------------------------------------------------------------------
# multi-step search fixtures

START_ALCOHOLS = ("OCC", "OCCC", "OCc1ccccc1", "OCCOC", "OCCCC")
ACID_LINKERS = ("OC(=O)CCBr", "OC(=O)CCCBr", "OC(=O)CCCCBr")
AMINO_ALCOHOLS = ("NCCO", "NCCCO")


@dataclass(frozen=True)
class SearchFixture:
    target_id: str
    target: str  # canonical SMILES
    depth: int


def _forward_step(tpl, partners: list[Molecule]) -> Molecule | None:
    """Pick the plain grafting outcome (both partners joined, one leaving
    atom lost); template application may also propose transesterification
    or ring-closure products, which are not the composed target."""
    expected = sum(len(m.atoms) for m in partners) - 1
    candidates = [
        m for m in apply_template_forward(tpl, partners)
        if len(m.atoms) == expected and len(m.fragments()) == 1
    ]
    if not candidates:
        return None
    return min(candidates, key=canonical_smiles)


def generate_search_fixtures(corpus: list[Reaction], count: int = 50,
                             seed: int = 11,
                             ) -> tuple[list[SearchFixture], set[str]]:
    """Targets forward-composed from stock via known templates, depths 1-4.

    Composition alternates esterification (consumes the free OH, leaves a
    bromide handle from the acid linker) and N-alkylation (consumes the
    bromide, leaves a fresh OH from an amino alcohol), so every target
    provably decomposes down to stock with corpus templates.
    """
    rng = random.Random(seed)
    ester_proto = next(r for r in corpus
                       if r.reaction_class == "esterification")
    alkyl_proto = next(r for r in corpus if r.reaction_class == "n_alkylation")
    tpl_ester = extract_template(ester_proto, radius=1)
    tpl_alkyl = extract_template(alkyl_proto, radius=1)

    stock = corpus_stock(corpus)
    stock.update(canonical_smiles(parse_smiles(s)) for s in
                 START_ALCOHOLS + ACID_LINKERS + AMINO_ALCOHOLS)

    fixtures: list[SearchFixture] = []
    seen: set[str] = set()
    attempts = 0
    while len(fixtures) < count and attempts < 50 * count:
        attempts += 1
        depth = 1 + (len(fixtures) % 4)
        current = parse_smiles(rng.choice(START_ALCOHOLS))
        ok = True
        for step in range(depth):
            if step % 2 == 0:
                linker = parse_smiles(rng.choice(ACID_LINKERS))
                current = _forward_step(tpl_ester, [linker, current])
            else:
                amine = parse_smiles(rng.choice(AMINO_ALCOHOLS))
                current = _forward_step(tpl_alkyl, [current, amine])
            if current is None:
                ok = False
                break
        if not ok:
            continue
        key = canonical_smiles(current)
        if key in seen or key in stock:
            continue
        seen.add(key)
        fixtures.append(SearchFixture(f"tgt-{len(fixtures):03d}", key, depth))
    return fixtures, stock


def write_stock(path, stock: set[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for smiles in sorted(stock):
            fh.write(smiles + "\n")
