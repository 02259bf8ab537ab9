"""Best-first AND-OR retrosynthesis search with plausibility filtering.

Molecules are OR nodes deduplicated by canonical SMILES (an AND-OR graph,
not a pure tree); single-step candidates are AND nodes costing
-log(generator probability). Each iteration recomputes node values bottom
up and picks the open molecule on the cheapest potential route; candidates
rejected by the binary ensemble filter are dropped before insertion, so no
tree node ever contains a filtered reaction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .chem import Molecule, canonical_smiles, parse_smiles, write_smiles_with_spans
from .errors import InvalidTarget, NoSolution, ReactionInvariantError
from .reactions import Reaction, Side, apply_template_retro, reaction_center
from .reactions.templates import TemplateLibrary
from .scoring.meta import ScoreBundle

INFINITY = math.inf


class ScoreOracle(Protocol):
    def score(self, rxn: Reaction) -> ScoreBundle: ...


@dataclass(frozen=True)
class BuildingBlockSet:
    """Purchasable starting materials keyed by canonical SMILES."""

    smiles: frozenset[str]
    source: str = ""

    def __contains__(self, mol: Molecule | str) -> bool:
        key = mol if isinstance(mol, str) else canonical_smiles(mol)
        return key in self.smiles

    def __len__(self) -> int:
        return len(self.smiles)

    @staticmethod
    def from_file(path, source: str = "") -> "BuildingBlockSet":
        keys = set()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    keys.add(canonical_smiles(parse_smiles(line)))
        return BuildingBlockSet(frozenset(keys), source or str(path))

    @staticmethod
    def from_smiles(items, source: str = "") -> "BuildingBlockSet":
        return BuildingBlockSet(
            frozenset(canonical_smiles(parse_smiles(s)) for s in items), source)


class SingleStepGenerator(Protocol):
    """Contract: mapped product -> ranked (reactant set, probability) list,
    probabilities in (0, 1], deduplicated by canonical reactant-set key."""

    def propose(self, product: Molecule) -> list[tuple[tuple[Molecule, ...], float]]: ...


class TemplateGenerator:
    """Baseline generator: apply the top-K most popular retro templates,
    score candidates by normalized template popularity.

    Proposals are cached by canonical product, so shared intermediates
    across searches are expanded once.
    """

    def __init__(self, library: TemplateLibrary, top_k: int = 50,
                 fanout: int = 50):
        self.templates = library.top(top_k)
        self.fanout = fanout
        self._cache: dict[str, list[tuple[tuple[Molecule, ...], float]]] = {}

    def propose(self, product: Molecule,
                ) -> list[tuple[tuple[Molecule, ...], float]]:
        product_key = canonical_smiles(product)
        cached = self._cache.get(product_key)
        if cached is not None:
            return cached
        best: dict[tuple[str, ...], tuple[float, tuple[Molecule, ...]]] = {}
        for tpl in self.templates:
            for reactants in apply_template_retro(tpl, product):
                key = tuple(sorted(canonical_smiles(m) for m in reactants))
                if key == (product_key,):
                    continue  # no-op proposal
                weight = float(tpl.popularity)
                if key not in best or best[key][0] < weight:
                    best[key] = (weight, reactants)
        ranked = sorted(
            ((w, k, r) for k, (w, r) in best.items()),
            key=lambda t: (-t[0], t[1]))[: self.fanout]
        total = sum(w for w, _, _ in ranked)
        result = [(r, w / total) for w, _, r in ranked]
        self._cache[product_key] = result
        return result


@dataclass
class AndNode:
    reaction: Reaction
    cost: float
    bundle: ScoreBundle | None
    parent: "OrNode"
    children: list["OrNode"] = field(default_factory=list)
    solved: bool = False
    pruned: bool = False

    @property
    def key(self) -> str:
        return self.reaction.canonical_key


@dataclass
class OrNode:
    smiles: str
    mol: Molecule
    in_stock: bool
    expanded: bool = False
    solved: bool = False
    parents: list[AndNode] = field(default_factory=list)
    children: list[AndNode] = field(default_factory=list)

    @property
    def open(self) -> bool:
        return not self.expanded and not self.in_stock


@dataclass
class SearchTree:
    root: OrNode
    nodes: dict[str, OrNode]
    expansions: int = 0

    def and_nodes(self):
        for node in self.nodes.values():
            yield from node.children


@dataclass
class RouteStep:
    reaction: Reaction
    cost: float
    bundle: ScoreBundle | None


@dataclass
class Route:
    target: str
    steps: list[RouteStep]
    total_cost: float
    expansions: int = 0
    route_id: str = ""

    def leaf_molecules(self) -> list[str]:
        produced = {canonical_smiles(s.reaction.product) for s in self.steps}
        leaves = []
        for step in self.steps:
            for mol in step.reaction.reactants:
                key = canonical_smiles(mol)
                if key not in produced and key not in leaves:
                    leaves.append(key)
        return leaves


@dataclass
class SearchResult:
    route: Route | None
    tree: SearchTree
    expansions: int
    stats: dict


def _values(tree: SearchTree, heuristic: Callable[[Molecule], float],
            ) -> dict[int, float]:
    """Cost-to-go lower bound per OR node (Bellman fixpoint)."""
    value: dict[int, float] = {}
    for node in tree.nodes.values():
        if node.in_stock:
            value[id(node)] = 0.0
        elif not node.expanded:
            value[id(node)] = heuristic(node.mol)
        else:
            value[id(node)] = INFINITY
    changed = True
    while changed:
        changed = False
        for node in tree.nodes.values():
            if node.in_stock or not node.expanded:
                continue
            best = INFINITY
            for and_node in node.children:
                total = and_node.cost
                for child in and_node.children:
                    total += value[id(child)]
                    if total == INFINITY:
                        break
                best = min(best, total)
            if best < value[id(node)]:
                value[id(node)] = best
                changed = True
    return value


def _route_bounds(tree: SearchTree, value: dict[int, float]) -> dict[int, float]:
    """Cheapest potential-route cost through each node (top-down fixpoint)."""
    rt = {key: INFINITY for key in value}
    rt[id(tree.root)] = value[id(tree.root)]
    changed = True
    while changed:
        changed = False
        for node in tree.nodes.values():
            base = rt[id(node)]
            if base == INFINITY or not node.expanded:
                continue
            slack = base - value[id(node)]
            for and_node in node.children:
                total = and_node.cost
                for child in and_node.children:
                    total += value[id(child)]
                if total == INFINITY:
                    continue
                for child in and_node.children:
                    candidate = slack + total
                    if candidate < rt[id(child)]:
                        rt[id(child)] = candidate
                        changed = True
    return rt


def _propagate_solved(node: OrNode) -> None:
    queue = [node]
    while queue:
        current = queue.pop()
        if current.solved:
            continue
        current.solved = True
        for and_node in current.parents:
            if not and_node.solved and all(c.solved for c in and_node.children):
                and_node.solved = True
                if not and_node.parent.solved:
                    queue.append(and_node.parent)


def retro_star(target: Molecule, generator: SingleStepGenerator,
               stock: BuildingBlockSet, scorer: ScoreOracle | None = None,
               filter_enabled: bool = True, expansion_limit: int = 500,
               heuristic: Callable[[Molecule], float] | None = None,
               ) -> SearchResult:
    """Best-first search from the target back to building blocks.

    Stops at the first solve or at the expansion limit; returns the
    minimum-cost solved route found, or None. With no scorer the filter is
    inoperative (filter_enabled requires a scorer).
    """
    if target is None or len(target.atoms) == 0:
        raise InvalidTarget("target molecule is empty")
    if filter_enabled and scorer is None:
        raise InvalidTarget("filtering requires a scorer")
    h = heuristic or (lambda _mol: 0.0)
    target_key = canonical_smiles(target)
    root = OrNode(target_key, target, in_stock=target_key in stock)
    tree = SearchTree(root, {target_key: root})
    stats = {"generated": 0, "filtered": 0, "deduplicated": 0}
    if root.in_stock:
        root.solved = True
        return SearchResult(
            Route(target_key, [], 0.0, 0), tree, 0, stats)

    while tree.expansions < expansion_limit and not root.solved:
        value = _values(tree, h)
        bounds = _route_bounds(tree, value)
        candidates = [
            n for n in tree.nodes.values()
            if n.open and bounds[id(n)] < INFINITY
        ]
        if not candidates:
            break
        node = min(candidates, key=lambda n: (bounds[id(n)], n.smiles))
        _expand(node, tree, generator, stock, scorer, filter_enabled, stats)

    route = None
    if root.solved:
        route = extract_top_route(tree)
        route.expansions = tree.expansions
    return SearchResult(route, tree, tree.expansions, stats)


def _expand(node: OrNode, tree: SearchTree, generator: SingleStepGenerator,
            stock: BuildingBlockSet, scorer: ScoreOracle | None,
            filter_enabled: bool, stats: dict) -> None:
    node.expanded = True
    tree.expansions += 1
    # expand a canonically ordered, fully mapped copy so identical molecules
    # are expanded identically regardless of how they were reached
    base = parse_smiles(node.smiles)
    mapped = base.with_maps({i: i + 1 for i in range(len(base.atoms))})
    for reactants, prob in generator.propose(mapped):
        stats["generated"] += 1
        try:
            reaction = Reaction(
                tuple(reactants), mapped,
                source_id=f"{node.smiles}#{stats['generated']}")
        except ReactionInvariantError:
            continue
        if filter_enabled and scorer is not None:
            quick = getattr(scorer, "quick_reject", None)
            if quick is not None and quick(reaction):
                stats["filtered"] += 1
                continue
        bundle = scorer.score(reaction) if scorer is not None else None
        if filter_enabled and bundle is not None and not bundle.accepted:
            stats["filtered"] += 1
            continue
        and_node = AndNode(
            reaction, cost=-math.log(prob), bundle=bundle, parent=node)
        for mol in reactants:
            key = canonical_smiles(mol)
            child = tree.nodes.get(key)
            if child is None:
                child = OrNode(key, mol, in_stock=key in stock)
                if child.in_stock:
                    child.solved = True
                tree.nodes[key] = child
            else:
                stats["deduplicated"] += 1
            child.parents.append(and_node)
            and_node.children.append(child)
        node.children.append(and_node)
        if and_node.children and all(c.solved for c in and_node.children):
            and_node.solved = True
            _propagate_solved(node)


def extract_top_route(tree: SearchTree) -> Route:
    """Minimum-cost solved route, linearized leaves first.

    Ties between equally cheap branches break on the canonical reaction
    key, so extraction is deterministic.
    """
    root = tree.root
    if not root.solved:
        raise NoSolution("tree has no solved route")
    # min solved cost per OR node (fixpoint over the solved subgraph)
    cost: dict[int, float] = {}
    solved_nodes = [n for n in tree.nodes.values() if n.solved]
    for node in solved_nodes:
        cost[id(node)] = 0.0 if node.in_stock else INFINITY
    changed = True
    while changed:
        changed = False
        for node in solved_nodes:
            if node.in_stock:
                continue
            for and_node in node.children:
                if not and_node.solved:
                    continue
                total = and_node.cost + sum(
                    cost[id(c)] for c in and_node.children)
                if total < cost[id(node)]:
                    cost[id(node)] = total
                    changed = True

    steps: list[RouteStep] = []
    emitted: set[int] = set()

    def descend(node: OrNode) -> None:
        if node.in_stock or id(node) in emitted:
            return
        emitted.add(id(node))
        best = min(
            (a for a in node.children if a.solved),
            key=lambda a: (a.cost + sum(cost[id(c)] for c in a.children),
                           a.key),
        )
        for child in sorted(best.children, key=lambda c: c.smiles):
            descend(child)
        steps.append(RouteStep(best.reaction, best.cost, best.bundle))

    descend(root)
    total = sum(s.cost for s in steps)
    return Route(root.smiles, steps, total)


def route_report(route: Route, stock: BuildingBlockSet | None = None) -> dict:
    """JSON-ready report with per-step SMILES, scores, stock flags and
    center character spans for display highlighting."""
    steps = []
    for step in route.steps:
        center = reaction_center(step.reaction)
        p_smiles, p_spans = write_smiles_with_spans(
            step.reaction.product.without_maps(), canonical=True,
            include_maps=False)
        product_center = sorted(
            p_spans[i] for side, i in center if side is Side.PRODUCT)
        reactants = []
        for mi, mol in enumerate(step.reaction.reactants):
            r_smiles, r_spans = write_smiles_with_spans(
                mol.without_maps(), canonical=True, include_maps=False)
            base = step.reaction.reactant_offsets[mi]
            spans = sorted(
                r_spans[i - base]
                for side, i in center
                if side is Side.REACTANT
                and base <= i < base + len(mol.atoms))
            reactants.append({
                "smiles": r_smiles,
                "center_spans": [list(s) for s in spans],
                "in_stock": (r_smiles in stock) if stock else None,
            })
        steps.append({
            "product": p_smiles,
            "product_center_spans": [list(s) for s in product_center],
            "reactants": reactants,
            "cost": step.cost,
            "scores": step.bundle.to_json() if step.bundle else None,
        })
    return {
        "id": route.route_id,
        "target": route.target,
        "steps": steps,
        "total_cost": route.total_cost,
        "expansions": route.expansions,
        "in_stock_leaves": route.leaf_molecules(),
    }


def save_route(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
