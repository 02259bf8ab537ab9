"""Canonical atom ranking and canonical SMILES output.

Ranks come from iterative neighborhood refinement seeded with
(element, charge, degree, H count, aromaticity). Remaining ties are broken
by trying each candidate and keeping the lexicographically smallest output
string, which makes the canonical form a pure function of the isomorphism
class. Map numbers, isotopes and stereo annotations never influence the
refinement, only the final string comparison.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from .mol import Molecule
from .smiles import emit_fragment


def _seed_keys(mol: Molecule, comp: list[int]):
    keys = {}
    for a in comp:
        atom = mol.atoms[a]
        keys[a] = (atom.element, atom.charge, mol.degree(a), atom.hydrogens,
                   atom.aromatic)
    return keys


def _refine(mol: Molecule, comp: list[int], rank: dict[int, int]) -> dict[int, int]:
    """Iterate neighborhood refinement until the partition stabilizes."""
    nbros = mol.neighbor_orders
    nclasses = len(set(rank.values()))
    while True:
        keyed = []
        for a in comp:
            nbr = [(order, rank[v]) for order, v in nbros[a]]
            nbr.sort()
            keyed.append((rank[a], nbr, a))
        keyed.sort()
        rank = {}
        cls = -1
        prev = None
        for r0, nbr, a in keyed:
            if (r0, nbr) != prev:
                cls += 1
                prev = (r0, nbr)
            rank[a] = cls
        if cls + 1 == nclasses:
            return rank
        nclasses = cls + 1


def _ranks_from_keys(keys: dict) -> dict[int, int]:
    ordered = sorted(set(keys.values()))
    index = {k: i for i, k in enumerate(ordered)}
    return {a: index[keys[a]] for a in keys}


def _tie_classes(rank: dict[int, int]) -> dict[int, list[int]]:
    classes: dict[int, list[int]] = {}
    for a, r in rank.items():
        classes.setdefault(r, []).append(a)
    return {r: sorted(atoms) for r, atoms in classes.items() if len(atoms) > 1}


def _canon_component(mol: Molecule, comp: list[int], include_maps: bool,
                     ) -> tuple[str, dict[int, int]]:
    rank = _refine(mol, comp, _ranks_from_keys(_seed_keys(mol, comp)))
    return _settle(mol, comp, rank, include_maps)


def _rank_aligned_automorphism(mol: Molecule, comp: list[int],
                               rank_a: dict[int, int], rank_b: dict[int, int],
                               include_maps: bool) -> bool:
    """True when mapping equal ranks of two discrete assignments gives a
    string-preserving automorphism, i.e. both emit identical output."""
    by_rank_a = {r: a for a, r in rank_a.items()}
    pi = {}
    for b_atom, r in rank_b.items():
        a_atom = by_rank_a.get(r)
        if a_atom is None:
            return False
        pi[a_atom] = b_atom
    for a_atom, b_atom in pi.items():
        x, y = mol.atoms[a_atom], mol.atoms[b_atom]
        if (x.element, x.charge, x.hydrogens, x.aromatic, x.isotope,
                x.chirality) != (y.element, y.charge, y.hydrogens,
                                 y.aromatic, y.isotope, y.chirality):
            return False
        if include_maps and x.map_number != y.map_number:
            return False
    seen = set()
    for a_atom in comp:
        for v, bond in mol.neighbors[a_atom]:
            if bond.direction is not None:
                return False  # conservative around stereo annotations
            key = id(bond)
            if key in seen:
                continue
            seen.add(key)
            image = mol.bond_between(pi[a_atom], pi[v])
            if image is None or image.order is not bond.order \
                    or image.direction is not None:
                return False
    return True


def _settle(mol: Molecule, comp: list[int], rank: dict[int, int],
            include_maps: bool) -> tuple[str, dict[int, int]]:
    ties = _tie_classes(rank)
    if not ties:
        # ranks are a bijection comp -> 0..len-1 here
        smiles, _ = emit_fragment(mol, comp, rank, include_maps)
        return smiles, rank
    tied = ties[min(ties)]
    size = len(comp)
    best: tuple[str, dict[int, int]] | None = None
    for candidate in tied:
        # promote one candidate below its peers, then re-refine
        trial = {a: rank[a] * 2 for a in comp}
        trial[candidate] -= 1
        refined = _refine(mol, comp, trial)
        if (best is not None and len(set(refined.values())) == size
                and _rank_aligned_automorphism(mol, comp, best[1], refined,
                                               include_maps)):
            continue  # provably emits the same string as the current best
        result = _settle(mol, comp, refined, include_maps)
        if best is None or result[0] < best[0]:
            best = result
    assert best is not None
    return best


def canonical_layout(mol: Molecule, include_maps: bool = True,
                     ) -> tuple[list[tuple[str, list[int], dict[int, int]]], list[int]]:
    """Canonical fragment layout and global ranks, cached per molecule.

    Returns ([(fragment smiles, component atoms, local ranks)...] sorted into
    output order, global rank per atom).
    """
    cached = mol._derived.get(("layout", include_maps))
    if cached is not None:
        return cached
    pieces = []
    for comp in mol.fragments():
        smiles, local = _canon_component(mol, comp, include_maps)
        pieces.append((smiles, comp, local))
    pieces.sort(key=lambda p: (p[0], p[1]))
    ranks = [0] * len(mol.atoms)
    offset = 0
    for smiles, comp, local in pieces:
        for a in comp:
            ranks[a] = offset + local[a]
        offset += len(comp)
    result = (pieces, ranks)
    mol._derived[("layout", include_maps)] = result
    return result


def canonical_rank(mol: Molecule) -> list[int]:
    """Canonical ranks (a permutation of 0..n-1), one per atom."""
    _, ranks = canonical_layout(mol)
    return ranks


def _settle_all(mol: Molecule, comp: list[int], rank: dict[int, int],
                include_maps: bool, cap: int) -> list[tuple[str, dict[int, int]]]:
    ties = _tie_classes(rank)
    if not ties:
        smiles, _ = emit_fragment(mol, comp, rank, include_maps)
        return [(smiles, rank)]
    tied = ties[min(ties)]
    results: list[tuple[str, dict[int, int]]] = []
    for candidate in tied:
        trial = {a: rank[a] * 2 for a in comp}
        trial[candidate] -= 1
        results.extend(
            _settle_all(mol, comp, _refine(mol, comp, trial), include_maps, cap))
        if len(results) > 4 * cap:
            break
    best = min(s for s, _ in results)
    return [(s, r) for s, r in results if s == best]


def minimal_orderings(mol: Molecule, cap: int = 24) -> list[list[int]]:
    """All global rank assignments whose canonical write is minimal.

    Used for two-sided pattern keys, where a symmetric side must be labeled
    every minimal way so the other side can break the tie. Enumeration is
    capped; beyond the cap only the first minimal assignment is kept.
    """
    per_comp: list[list[tuple[str, dict[int, int]]]] = []
    comps = mol.fragments()
    for comp in comps:
        seeded = _refine(mol, comp, _ranks_from_keys(_seed_keys(mol, comp)))
        per_comp.append(_settle_all(mol, comp, seeded, True, cap))
    # order fragments by their minimal string; equal strings may appear in
    # any relative order, so enumerate permutations inside each equal group
    order = sorted(range(len(comps)), key=lambda i: per_comp[i][0][0])
    groups: list[list[int]] = []
    for i in order:
        if groups and per_comp[groups[-1][-1]][0][0] == per_comp[i][0][0]:
            groups[-1].append(i)
        else:
            groups.append([i])

    group_orders: list[list[tuple[int, ...]]] = []
    for g in groups:
        perms = list(itertools.permutations(g))
        if len(perms) > cap:
            perms = perms[:1]
        group_orders.append(perms)

    results: list[list[int]] = []
    for combo in itertools.product(*group_orders):
        frag_order = [i for perm in combo for i in perm]
        choice_lists = [per_comp[i] for i in frag_order]
        for picks in itertools.product(*choice_lists):
            ranks = [0] * len(mol.atoms)
            offset = 0
            for (_, local), ci in zip(picks, frag_order):
                for a in comps[ci]:
                    ranks[a] = offset + local[a]
                offset += len(comps[ci])
            results.append(ranks)
            if len(results) >= cap:
                return results
    return results


def write_smiles(mol: Molecule, canonical: bool = False,
                 include_maps: bool = True) -> str:
    return write_smiles_with_spans(mol, canonical, include_maps)[0]


def write_smiles_with_spans(mol: Molecule, canonical: bool = False,
                            include_maps: bool = True,
                            ) -> tuple[str, list[tuple[int, int]]]:
    """Write SMILES plus per-atom (start, end) character spans."""
    if canonical:
        pieces, ranks = canonical_layout(mol, include_maps)
        order = [(comp, {a: ranks[a] for a in comp}) for _, comp, _ in pieces]
    else:
        order = [(comp, {a: a for a in comp}) for comp in mol.fragments()]
    spans: list[tuple[int, int]] = [(0, 0)] * len(mol.atoms)
    parts = []
    offset = 0
    for comp, rank in order:
        smiles, frag_spans = emit_fragment(mol, comp, rank, include_maps,
                                           want_spans=True)
        for atom, start, end in frag_spans:
            spans[atom] = (offset + start, offset + end)
        parts.append(smiles)
        offset += len(smiles) + 1  # separating dot
    return ".".join(parts), spans


@lru_cache(maxsize=32768)
def _canonical_cached(mol: Molecule, include_maps: bool) -> str:
    pieces, _ = canonical_layout(mol, include_maps)
    return ".".join(p[0] for p in pieces)


def canonical_smiles(mol: Molecule, include_maps: bool = False) -> str:
    """Canonical SMILES; map numbers are stripped unless requested.

    Cached globally by structural equality, so freshly built copies of a
    known molecule are free.
    """
    target = mol if include_maps else mol.without_maps()
    return _canonical_cached(target, include_maps)
