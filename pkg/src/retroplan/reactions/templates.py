"""Reaction template extraction, matching and application.

A template is a pair of pattern graphs (product side, reactant side)
stored as ordinary Molecules whose map numbers act as cross-side labels.
Atoms at the extraction boundary become wildcard attachment points
(element ``*``). Matching is exact on element, aromatic flag, charge and
bond order; recorded hydrogen counts drive H/charge deltas at rewrite
time, never matching.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

from ..chem import Molecule, canonical_smiles, parse_smiles, write_smiles
from ..chem.canon import minimal_orderings
from ..chem.mol import Atom, Bond, BondOrder, MolBuilder
from ..errors import NoMappedAtoms, RetroplanError
from .reaction import Reaction, Side, reaction_center

MAX_EMBEDDINGS = 256


def combine_molecules(mols: list[Molecule] | tuple[Molecule, ...]) -> Molecule:
    """Dot-join molecules into one multi-fragment molecule."""
    builder = MolBuilder()
    for mol in mols:
        builder.merge(mol)
    merged, _ = builder.finish()
    return merged


@dataclass(frozen=True)
class ReactionTemplate:
    product_side: Molecule
    reactant_side: Molecule
    radius: int
    popularity: int = 1

    @cached_property
    def key(self) -> str:
        return two_sided_key(self.product_side, self.reactant_side)

    def with_popularity(self, count: int) -> "ReactionTemplate":
        return replace(self, popularity=count)


def two_sided_key(left: Molecule, right: Molecule) -> str:
    """Canonical string of a two-sided labeled pattern.

    Left-side labels are assigned from canonical ranks and transferred to
    the right side through the original map correspondence; all minimal
    left labelings are tried and the smallest combined string wins, so the
    key is invariant under input atom order even when one side is
    symmetric on its own.
    """
    right_by_map = right.map_to_index
    best: str | None = None
    for ranks in minimal_orderings(left.without_maps()):
        left_rel = left.with_maps(
            {i: ranks[i] + 1 for i in range(len(left.atoms))})
        transfer: dict[int, int | None] = {
            i: None for i in range(len(right.atoms))}
        for num, li in left.map_to_index.items():
            ri = right_by_map.get(num)
            if ri is not None:
                transfer[ri] = ranks[li] + 1
        right_rel = right.with_maps(transfer)
        combined = (
            canonical_smiles(left_rel, include_maps=True)
            + ">>"
            + canonical_smiles(right_rel, include_maps=True)
        )
        if best is None or combined < best:
            best = combined
    assert best is not None
    return best


def parse_template(key: str, radius: int, popularity: int = 1) -> ReactionTemplate:
    left, _, right = key.partition(">>")
    if not right:
        raise RetroplanError(f"template key missing '>>': {key[:40]!r}")
    return ReactionTemplate(
        parse_smiles(left), parse_smiles(right), radius, popularity)


def _pattern_side(mol: Molecule, center_idx: set[int], radius: int,
                  allowed: set[int] | None) -> Molecule:
    """Build one side's pattern: atoms within ``radius`` of the center plus
    wildcard attachment atoms for boundary-crossing bonds.

    ``allowed`` restricts the graph (mapped reactant atoms); None = all.
    """
    if allowed is None:
        allowed = set(range(len(mol.atoms)))
    dist = {i: 0 for i in center_idx if i in allowed}
    frontier = list(dist)
    while frontier:
        nxt = []
        for u in frontier:
            if dist[u] == radius:
                continue
            for v, _ in mol.neighbors[u]:
                if v in allowed and v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    included = sorted(dist)
    keep = set(included)
    builder = MolBuilder()
    new_idx: dict[int, int] = {}
    for i in included:
        a = mol.atoms[i]
        new_idx[i] = builder.add_atom(
            Atom(a.element, a.charge, a.hydrogens, a.aromatic,
                 map_number=a.map_number))
    # boundary atoms become wildcards carrying their map label, one per atom
    for i in included:
        for v, bond in mol.neighbors[i]:
            if v in keep or v not in allowed:
                continue
            if v not in new_idx:
                new_idx[v] = builder.add_atom(
                    Atom("*", map_number=mol.atoms[v].map_number))
            builder.add_bond(new_idx[i], new_idx[v], bond.order)
    for bond in mol.bonds:
        if bond.a in keep and bond.b in keep:
            builder.add_bond(new_idx[bond.a], new_idx[bond.b], bond.order)
    pattern, _ = builder.finish()
    return pattern


def extract_template(rxn: Reaction, radius: int = 1) -> ReactionTemplate:
    center = reaction_center(rxn)
    if not center:
        raise NoMappedAtoms("empty reaction center")
    product_center = {i for side, i in center if side is Side.PRODUCT}
    reactant_center = {i for side, i in center if side is Side.REACTANT}
    product_pattern = _pattern_side(rxn.product, product_center, radius, None)
    combined = combine_molecules(rxn.reactants)
    mapped = {i for i, a in enumerate(combined.atoms) if a.map_number is not None}
    reactant_pattern = _pattern_side(combined, reactant_center, radius, mapped)
    return ReactionTemplate(product_pattern, reactant_pattern, radius)


# ---------------------------------------------------------------------------
# matching


def _atom_matches(pattern: Atom, target: Atom) -> bool:
    if pattern.element == "*":
        return True
    return (pattern.element == target.element
            and pattern.aromatic == target.aromatic
            and pattern.charge == target.charge)


def _match_order(pattern: Molecule) -> list[tuple[int, int | None]]:
    """Visit order as (pattern atom, already-matched neighbor or None).

    Each fragment starts at its most constrained concrete atom; subsequent
    atoms are always adjacent to an already-placed one so candidates come
    from target adjacency.
    """
    order: list[tuple[int, int | None]] = []
    placed: set[int] = set()
    for comp in pattern.fragments():
        concrete = [i for i in comp if pattern.atoms[i].element != "*"]
        seed_pool = concrete or comp
        seed = max(seed_pool, key=lambda i: (pattern.degree(i), i))
        order.append((seed, None))
        placed.add(seed)
        frontier = [seed]
        while frontier:
            nxt = []
            for u in frontier:
                for v, _ in sorted(
                        pattern.neighbors[u],
                        key=lambda t: (pattern.atoms[t[0]].element == "*",
                                       -pattern.degree(t[0]), t[0])):
                    if v not in placed:
                        placed.add(v)
                        order.append((v, u))
                        nxt.append(v)
            frontier = nxt
    return order


def find_embeddings(pattern: Molecule, target: Molecule,
                    limit: int = MAX_EMBEDDINGS) -> list[dict[int, int]]:
    """Injective subgraph monomorphisms pattern -> target.

    Every pattern bond must exist in the target with the same order; extra
    target bonds are allowed.
    """
    order = _match_order(pattern)
    results: list[dict[int, int]] = []
    assignment: dict[int, int] = {}
    used: set[int] = set()

    def candidates(p_atom: int, anchor: int | None):
        patom = pattern.atoms[p_atom]
        if anchor is None:
            pool = range(len(target.atoms))
        else:
            pool = [v for v, _ in target.neighbors[assignment[anchor]]]
        for t in pool:
            if t in used:
                continue
            if not _atom_matches(patom, target.atoms[t]):
                continue
            if target.degree(t) < pattern.degree(p_atom):
                continue
            ok = True
            for v, bond in pattern.neighbors[p_atom]:
                if v in assignment:
                    tb = target.bond_between(t, assignment[v])
                    if tb is None or tb.order is not bond.order:
                        ok = False
                        break
            if ok:
                yield t

    def backtrack(pos: int) -> None:
        if len(results) >= limit:
            return
        if pos == len(order):
            results.append(dict(assignment))
            return
        p_atom, anchor = order[pos]
        for t in candidates(p_atom, anchor):
            assignment[p_atom] = t
            used.add(t)
            backtrack(pos + 1)
            used.discard(t)
            del assignment[p_atom]

    backtrack(0)
    return results


# ---------------------------------------------------------------------------
# rewriting


def _plan_signature(match_side: Molecule, build_side: Molecule,
                    embedding: dict[int, int]) -> frozenset:
    """Cheap signature of the rewrite an embedding would perform.

    Embeddings with equal signatures (common under pattern automorphisms)
    rewrite to identical molecules, so only one needs to be built.
    """
    removed = frozenset(
        (min(embedding[b.a], embedding[b.b]),
         max(embedding[b.a], embedding[b.b]))
        for b in match_side.bonds)
    build_by_map = build_side.map_to_index
    match_by_map = match_side.map_to_index
    placed: dict[int, object] = {}
    for num, bi in build_by_map.items():
        mi = match_by_map.get(num)
        placed[bi] = embedding[mi] if mi is not None else ("new", bi)
    for bi, atom in enumerate(build_side.atoms):
        placed.setdefault(bi, ("new", bi))
    added = frozenset(
        (*sorted((str(placed[b.a]), str(placed[b.b]))), b.order.value)
        for b in build_side.bonds)
    changes = []
    for num, bi in build_by_map.items():
        mi = match_by_map.get(num)
        if mi is None:
            continue
        b_atom, m_atom = build_side.atoms[bi], match_side.atoms[mi]
        if b_atom.element == "*" or m_atom.element == "*":
            continue
        changes.append((embedding[mi],
                        b_atom.hydrogens - m_atom.hydrogens,
                        b_atom.charge - m_atom.charge, b_atom.aromatic))
    deleted = frozenset(
        embedding[mi] for num, mi in match_by_map.items()
        if num not in build_by_map and match_side.atoms[mi].element != "*")
    return frozenset((removed, added, frozenset(changes), deleted))


def _rewrite(match_side: Molecule, build_side: Molecule, target: Molecule,
             embedding: dict[int, int]) -> tuple[Molecule, set[int]] | None:
    """Rewrite ``target`` by replacing the matched pattern with the other side.

    Returns (molecule, core atom indices in the result) or None when the
    rewrite produces an invalid molecule.
    """
    builder = MolBuilder(target)
    for bond in match_side.bonds:
        builder.remove_bond(embedding[bond.a], embedding[bond.b])

    build_by_map = build_side.map_to_index
    match_by_map = match_side.map_to_index
    placed: dict[int, int] = {}
    for num, bi in build_by_map.items():
        mi = match_by_map.get(num)
        if mi is None:
            continue
        t = embedding[mi]
        placed[bi] = t
        b_atom = build_side.atoms[bi]
        m_atom = match_side.atoms[mi]
        if b_atom.element == "*" or m_atom.element == "*":
            continue
        t_atom = target.atoms[t]
        builder.set_atom(
            t,
            hydrogens=max(0, t_atom.hydrogens + b_atom.hydrogens
                          - m_atom.hydrogens),
            charge=t_atom.charge + b_atom.charge - m_atom.charge,
            aromatic=b_atom.aromatic,
        )
    # atoms that exist only on the build side are created fresh; they get
    # fresh map numbers so they stay part of downstream reaction centers
    next_map = 1 + max(
        (a.map_number for a in target.atoms if a.map_number is not None),
        default=0)
    for bi, atom in enumerate(build_side.atoms):
        if bi in placed:
            continue
        if atom.element == "*":
            return None  # unanchored attachment cannot be instantiated
        placed[bi] = builder.add_atom(
            Atom(atom.element, atom.charge, atom.hydrogens, atom.aromatic,
                 map_number=next_map))
        next_map += 1
    # atoms that exist only on the match side disappear
    for num, mi in match_by_map.items():
        if num not in build_by_map and match_side.atoms[mi].element != "*":
            builder.remove_atom(embedding[mi])
    for mi, atom in enumerate(match_side.atoms):
        if atom.map_number is None and atom.element != "*":
            builder.remove_atom(embedding[mi])
    for bond in build_side.bonds:
        i, j = placed.get(bond.a), placed.get(bond.b)
        if i is None or j is None or i == j:
            return None
        if builder.atoms[i] is None or builder.atoms[j] is None:
            return None
        builder.add_bond(i, j, bond.order)
    try:
        result, index_map = builder.finish()
    except RetroplanError:
        return None
    core = {index_map[t] for t in placed.values() if t in index_map}
    return result, core


def _split(mol: Molecule) -> list[Molecule]:
    return [mol.subgraph(comp)[0] for comp in mol.fragments()]


def apply_template_retro(tpl: ReactionTemplate, product: Molecule,
                         ) -> list[tuple[Molecule, ...]]:
    """All reactant sets obtainable by applying the template backwards.

    Candidates are deduplicated by canonical SMILES; no match gives [].
    """
    seen: set[tuple[str, ...]] = set()
    seen_plans: set[frozenset] = set()
    out: list[tuple[Molecule, ...]] = []
    for emb in find_embeddings(tpl.product_side, product):
        plan = _plan_signature(tpl.product_side, tpl.reactant_side, emb)
        if plan in seen_plans:
            continue
        seen_plans.add(plan)
        rewritten = _rewrite(tpl.product_side, tpl.reactant_side, product, emb)
        if rewritten is None:
            continue
        fragments = _split(rewritten[0])
        key = tuple(sorted(canonical_smiles(f) for f in fragments))
        if key in seen:
            continue
        seen.add(key)
        out.append(tuple(fragments))
    return out


def apply_template_forward(tpl: ReactionTemplate,
                           reactants: list[Molecule] | tuple[Molecule, ...],
                           ) -> list[Molecule]:
    """Product candidates from applying the template forwards.

    Per embedding, the rewritten components containing template-core atoms
    are dot-joined into one (possibly multi-fragment) candidate molecule;
    untouched spectator components are not products.
    """
    target = combine_molecules(list(reactants))
    seen: set[str] = set()
    seen_plans: set[frozenset] = set()
    out: list[Molecule] = []
    for emb in find_embeddings(tpl.reactant_side, target):
        plan = _plan_signature(tpl.reactant_side, tpl.product_side, emb)
        if plan in seen_plans:
            continue
        seen_plans.add(plan)
        rewritten = _rewrite(tpl.reactant_side, tpl.product_side, target, emb)
        if rewritten is None:
            continue
        mol, core = rewritten
        comps = [comp for comp in mol.fragments() if any(i in core for i in comp)]
        if not comps:
            continue
        flat = sorted(i for comp in comps for i in comp)
        candidate = mol.subgraph(flat)[0]
        key = canonical_smiles(candidate)
        if key in seen:
            continue
        seen.add(key)
        out.append(candidate)
    return out


# ---------------------------------------------------------------------------
# template libraries


class TemplateLibrary:
    """Deduplicated templates with popularity counts, sorted most-popular
    first (ties by key) so top-K slicing is deterministic."""

    def __init__(self, templates: list[ReactionTemplate]):
        self.templates = sorted(
            templates, key=lambda t: (-t.popularity, t.key))

    def __len__(self) -> int:
        return len(self.templates)

    def __iter__(self):
        return iter(self.templates)

    def top(self, k: int) -> list[ReactionTemplate]:
        return self.templates[:k]

    @staticmethod
    def from_reactions(reactions: list[Reaction], radius: int = 1,
                       ) -> tuple["TemplateLibrary", list[dict]]:
        """Extract and deduplicate templates; returns (library, skip report)."""
        counts: dict[str, int] = {}
        report: list[dict] = []
        for rxn in reactions:
            try:
                tpl = extract_template(rxn, radius)
            except RetroplanError as err:
                report.append({"id": rxn.source_id, "error": str(err)})
                continue
            counts[tpl.key] = counts.get(tpl.key, 0) + 1
        templates = [
            parse_template(key, radius, count)
            for key, count in counts.items()
        ]
        return TemplateLibrary(templates), report

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            radius = self.templates[0].radius if self.templates else 1
            fh.write(f"# retroplan templates v1 radius={radius}\n")
            for tpl in self.templates:
                fh.write(f"{tpl.key}\t{tpl.popularity}\n")

    @staticmethod
    def load(path) -> "TemplateLibrary":
        templates = []
        radius = 1
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    if "radius=" in line:
                        radius = int(line.split("radius=")[1].split()[0])
                    continue
                key, _, count = line.partition("\t")
                templates.append(parse_template(key, radius, int(count or 1)))
        return TemplateLibrary(templates)
