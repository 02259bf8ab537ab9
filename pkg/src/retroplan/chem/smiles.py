"""SMILES reading and writing for the supported subset.

Supported: organic-subset atoms, lowercase aromatic atoms, bracket atoms
with isotope / chirality / H count / charge / map number, bond symbols
``- = # :``, directional ``/ \\`` (kept as opaque annotations), branches,
ring closures (single digit and %nn), and dot-separated fragments.
Stereochemistry survives round-trips but never influences canonical ranks.
"""

from __future__ import annotations

import functools
import re

from ..errors import (
    DanglingBond,
    EmptyInput,
    InvalidCharge,
    RingBondConflict,
    SmilesParseError,
    UnbalancedBranch,
    UnclosedRingBond,
    UnknownElement,
    UnsupportedFeature,
)
from .elements import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    ORGANIC_SUBSET,
    SUPPORTED_ELEMENTS,
    implicit_hydrogens,
)
from .mol import Atom, Bond, BondOrder, Molecule

_BOND_CHARS = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE,
               "#": BondOrder.TRIPLE, ":": BondOrder.AROMATIC}

_BRACKET_RE = re.compile(
    r"""\[
        (?P<isotope>\d+)?
        (?P<symbol>\*|[A-Z][a-z]?|[a-z]{1,2})
        (?P<chirality>@{1,2})?
        (?P<hcount>H\d*)?
        (?P<charge>\+{2,3}|-{2,3}|[+-]\d*)?
        (?::(?P<map>\d+))?
        \]""",
    re.VERBOSE,
)


def _bracket_atom(m: re.Match, offset: int) -> Atom:
    symbol = m.group("symbol")
    aromatic = symbol.islower()
    if aromatic and symbol not in AROMATIC_BRACKET:
        raise UnknownElement(f"unknown aromatic symbol {symbol!r}", offset)
    element = symbol if symbol == "*" else symbol.capitalize()
    if element not in SUPPORTED_ELEMENTS:
        raise UnknownElement(f"unknown element {symbol!r}", offset)
    isotope = int(m.group("isotope")) if m.group("isotope") else None
    if isotope is not None and isotope == 0:
        raise SmilesParseError("isotope must be positive", offset)
    hcount = 0
    if m.group("hcount"):
        digits = m.group("hcount")[1:]
        hcount = int(digits) if digits else 1
    charge = 0
    if m.group("charge"):
        raw = m.group("charge")
        if raw in ("++", "+++", "--", "---"):
            charge = len(raw) * (1 if raw[0] == "+" else -1)
        else:
            sign = 1 if raw[0] == "+" else -1
            charge = sign * (int(raw[1:]) if len(raw) > 1 else 1)
        if abs(charge) > 15:
            raise InvalidCharge(f"charge {charge} out of range", offset)
    mapnum = int(m.group("map")) if m.group("map") else None
    if mapnum == 0:
        mapnum = None
    return Atom(
        element=element,
        charge=charge,
        hydrogens=hcount,
        aromatic=aromatic,
        isotope=isotope,
        map_number=mapnum,
        chirality=m.group("chirality"),
    )


class _PendingAtom:
    __slots__ = ("atom", "explicit_h", "bond_sum")

    def __init__(self, atom: Atom, explicit_h: bool):
        self.atom = atom
        self.explicit_h = explicit_h
        self.bond_sum = 0  # h_units of attached bonds, for implicit H


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a Molecule.

    Raises subclasses of SmilesParseError carrying the byte offset of the
    problem; unclosed branches and ring bonds are reported at end of input.
    """
    if not text:
        raise EmptyInput("empty SMILES", 0)
    atoms: list[_PendingAtom] = []
    bonds: list[Bond] = []
    prev: int | None = None
    pending_order: BondOrder | None = None
    pending_dir: str | None = None
    pending_offset = 0
    branch_stack: list[tuple[int | None, int]] = []
    # ring number -> (atom, order-or-None, direction-or-None, open offset)
    rings: dict[int, tuple[int, BondOrder | None, str | None, int]] = {}
    i = 0
    n = len(text)

    def add_bond(a: int, b: int, order: BondOrder | None, direction: str | None,
                 offset: int) -> None:
        if order is None:
            both_aromatic = atoms[a].atom.aromatic and atoms[b].atom.aromatic
            order = BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE
        for existing in bonds:
            if {existing.a, existing.b} == {a, b}:
                raise SmilesParseError("duplicate bond between atoms", offset)
        bonds.append(Bond(a, b, order, direction))
        atoms[a].bond_sum += order.h_units
        atoms[b].bond_sum += order.h_units

    def attach(idx: int, offset: int) -> None:
        nonlocal prev, pending_order, pending_dir
        if prev is not None:
            add_bond(prev, idx, pending_order, pending_dir, offset)
        elif pending_order is not None or pending_dir is not None:
            raise DanglingBond("bond symbol with no preceding atom", pending_offset)
        prev = idx
        pending_order = None
        pending_dir = None

    def ring_closure(number: int, offset: int) -> None:
        nonlocal pending_order, pending_dir
        if prev is None:
            raise DanglingBond("ring closure before any atom", offset)
        if number in rings:
            other, order0, dir0, _ = rings.pop(number)
            if other == prev:
                raise SmilesParseError("ring bond to self", offset)
            if (order0 is not None and pending_order is not None
                    and order0 is not pending_order):
                raise RingBondConflict(
                    f"ring bond {number} has conflicting orders", offset)
            order = pending_order if pending_order is not None else order0
            # direction is stored relative to first-seen -> second-seen atom
            direction = dir0
            if direction is None and pending_dir is not None:
                direction = "\\" if pending_dir == "/" else "/"
            add_bond(other, prev, order, direction, offset)
        else:
            rings[number] = (prev, pending_order, pending_dir, offset)
        pending_order = None
        pending_dir = None

    while i < n:
        ch = text[i]
        if ch == "[":
            m = _BRACKET_RE.match(text, i)
            if m is None:
                end = text.find("]", i)
                if end < 0:
                    raise SmilesParseError("unterminated bracket atom", i)
                raise _diagnose_bracket(text[i : end + 1], i)
            atoms.append(_PendingAtom(_bracket_atom(m, i), explicit_h=True))
            attach(len(atoms) - 1, i)
            i = m.end()
        elif ch.isalpha() or ch == "*":
            if ch.isupper() and text[i : i + 2] in ("Cl", "Br"):
                symbol = text[i : i + 2]
            elif ch == "*" or (ch.isupper() and ch in ORGANIC_SUBSET):
                symbol = ch
            elif ch in AROMATIC_ORGANIC:
                symbol = ch
            else:
                raise UnknownElement(
                    f"symbol {ch!r} not in the organic subset", i)
            aromatic = symbol.islower()
            element = symbol.capitalize() if aromatic else symbol
            atoms.append(
                _PendingAtom(Atom(element=element, aromatic=aromatic),
                             explicit_h=False))
            attach(len(atoms) - 1, i)
            i += len(symbol)
        elif ch in _BOND_CHARS:
            if pending_order is not None:
                raise SmilesParseError("two bond symbols in a row", i)
            pending_order = _BOND_CHARS[ch]
            pending_offset = i
            i += 1
        elif ch in "/\\":
            pending_dir = ch
            pending_offset = i
            i += 1
        elif ch == "(":
            if prev is None:
                raise UnbalancedBranch("branch before any atom", i)
            branch_stack.append((prev, i))
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise UnbalancedBranch("unmatched ')'", i)
            if pending_order is not None or pending_dir is not None:
                raise DanglingBond("bond symbol before ')'", pending_offset)
            prev, _ = branch_stack.pop()
            i += 1
        elif ch.isdigit():
            ring_closure(int(ch), i)
            i += 1
        elif ch == "%":
            if i + 2 >= n or not text[i + 1 : i + 3].isdigit():
                raise SmilesParseError("%% must be followed by two digits", i)
            ring_closure(int(text[i + 1 : i + 3]), i)
            i += 3
        elif ch == ".":
            if pending_order is not None or pending_dir is not None:
                raise DanglingBond("bond symbol before '.'", pending_offset)
            prev = None
            i += 1
        else:
            raise SmilesParseError(f"unexpected character {ch!r}", i)

    if branch_stack:
        raise UnbalancedBranch(
            f"unclosed branch opened at offset {branch_stack[-1][1]}", n)
    if rings:
        first = min(off for (_, _, _, off) in rings.values())
        raise UnclosedRingBond(f"unclosed ring bond opened at offset {first}", n)
    if pending_order is not None or pending_dir is not None:
        raise DanglingBond("trailing bond symbol", pending_offset)
    if not atoms:
        raise EmptyInput("no atoms in SMILES", 0)

    final_atoms = []
    for p in atoms:
        if p.explicit_h:
            final_atoms.append(p.atom)
        else:
            h = implicit_hydrogens(p.atom.element, p.atom.aromatic, p.bond_sum)
            final_atoms.append(
                Atom(p.atom.element, p.atom.charge, h, p.atom.aromatic))
    return Molecule(tuple(final_atoms), tuple(bonds))


def _diagnose_bracket(fragment: str, offset: int) -> SmilesParseError:
    """Pick the most specific error for a malformed bracket atom."""
    if re.search(r"[+-]{2,}\d|\d[+-]|[+-]\d+[+-]", fragment):
        return InvalidCharge(f"malformed charge in {fragment!r}", offset)
    sym = re.match(r"\[(\d+)?([A-Za-z*][a-z]?)", fragment)
    if sym and sym.group(2).capitalize() not in SUPPORTED_ELEMENTS \
            and sym.group(2) != "*":
        return UnknownElement(f"unknown element in {fragment!r}", offset)
    if "@" in fragment and re.search(r"@[A-Z0-9]", fragment.replace("@@", "")):
        return UnsupportedFeature(
            f"extended chirality not supported: {fragment!r}")
    return SmilesParseError(f"malformed bracket atom {fragment!r}", offset)


# ---------------------------------------------------------------------------
# writing


def _needs_bracket(atom: Atom, bond_sum: int) -> bool:
    if (atom.map_number is not None or atom.isotope is not None
            or atom.charge != 0 or atom.chirality is not None):
        return True
    if atom.element == "*":
        return atom.hydrogens != 0
    if atom.element not in ORGANIC_SUBSET:
        return True
    if atom.aromatic and atom.element.lower() not in AROMATIC_ORGANIC:
        return True
    # bare atoms must round-trip the H count through the implicit rule
    return implicit_hydrogens(atom.element, atom.aromatic, bond_sum) \
        != atom.hydrogens


@functools.lru_cache(maxsize=65536)
def _atom_token(atom: Atom, bond_sum: int, include_map: bool) -> str:
    shown = atom if include_map else Atom(
        atom.element, atom.charge, atom.hydrogens, atom.aromatic,
        atom.isotope, None, atom.chirality)
    symbol = shown.element.lower() if shown.aromatic else shown.element
    if not _needs_bracket(shown, bond_sum):
        return symbol
    parts = ["["]
    if shown.isotope is not None:
        parts.append(str(shown.isotope))
    parts.append(symbol)
    if shown.chirality:
        parts.append(shown.chirality)
    if shown.hydrogens == 1:
        parts.append("H")
    elif shown.hydrogens > 1:
        parts.append(f"H{shown.hydrogens}")
    if shown.charge == 1:
        parts.append("+")
    elif shown.charge == -1:
        parts.append("-")
    elif shown.charge > 0:
        parts.append(f"+{shown.charge}")
    elif shown.charge < 0:
        parts.append(str(shown.charge))
    if shown.map_number is not None:
        parts.append(f":{shown.map_number}")
    parts.append("]")
    return "".join(parts)


def _bond_token(bond: Bond, from_atom: int, mol: Molecule) -> str:
    a, b = mol.atoms[bond.a], mol.atoms[bond.b]
    if bond.direction is not None:
        d = bond.direction
        if from_atom != bond.a:
            d = "\\" if d == "/" else "/"
        return d
    if bond.order is BondOrder.SINGLE:
        return "-" if (a.aromatic and b.aromatic) else ""
    if bond.order is BondOrder.AROMATIC:
        return "" if (a.aromatic and b.aromatic) else ":"
    return bond.order.value


def atom_tokens(mol: Molecule, include_maps: bool) -> tuple[str, ...]:
    """Atom output tokens, cached on the molecule."""
    cached = mol._derived.get(include_maps)
    if cached is None:
        sums = mol.h_bond_sums
        cached = tuple(
            _atom_token(a, sums[i], include_maps)
            for i, a in enumerate(mol.atoms)
        )
        mol._derived[include_maps] = cached
    return cached


def bond_tokens(mol: Molecule) -> dict[int, tuple[str, str]]:
    """id(bond) -> (token from a, token from b), cached on the molecule."""
    cached = mol._derived.get("bonds")
    if cached is None:
        cached = {
            id(b): (_bond_token(b, b.a, mol), _bond_token(b, b.b, mol))
            for b in mol.bonds
        }
        mol._derived["bonds"] = cached
    return cached


def emit_fragment(mol: Molecule, component: list[int], rank: dict[int, int],
                  include_maps: bool = True, want_spans: bool = False,
                  ) -> tuple[str, list[tuple[int, int, int]]]:
    """Write one connected component following the given atom ranks.

    Returns (smiles, spans); spans lists (atom index, start, end) char
    offsets of each atom token and is only filled when requested.
    """
    n = len(mol.atoms)
    root = component[0]
    for a in component:
        if rank[a] < rank[root]:
            root = a
    neighbors = mol.neighbors
    parent: list[tuple[int, Bond] | None] = [None] * n
    children: list[list[int]] = [[] for _ in range(n)]
    ring_at: list[list[Bond]] = [[] for _ in range(n)]
    visited = [False] * n
    # count bonds inside the component to skip ring handling on trees
    acyclic = sum(len(neighbors[a]) for a in component) == \
        2 * (len(component) - 1)
    if acyclic:
        stack2: list[tuple[int, int, Bond | None]] = [(root, -1, None)]
        while stack2:
            u, p, bond = stack2.pop()
            visited[u] = True
            if bond is not None:
                parent[u] = (p, bond)
                children[p].append(u)
            order = [(rank[v], v, b) for v, b in neighbors[u]
                     if not visited[v]]
            if order:
                order.sort(reverse=True)
                for _, v, b in order:
                    stack2.append((v, u, b))
    else:
        # depth-first spanning tree in rank order; leftovers close rings
        used: set[int] = set()
        stack3: list[tuple[int, int, Bond | None]] = [(root, -1, None)]
        while stack3:
            u, p, bond = stack3.pop()
            if visited[u]:
                if bond is not None and id(bond) not in used:
                    used.add(id(bond))
                    ring_at[p].append(bond)
                    ring_at[u].append(bond)
                continue
            visited[u] = True
            if bond is not None:
                used.add(id(bond))
                parent[u] = (p, bond)
                children[p].append(u)
            order = [(rank[v], v, b) for v, b in neighbors[u]
                     if id(b) not in used]
            order.sort(reverse=True)
            for _, v, b in order:
                stack3.append((v, u, b))
        for u in component:
            if ring_at[u]:
                ring_at[u].sort(key=lambda b: (rank[b.other(u)],
                                               b.order.value))

    tokens = atom_tokens(mol, include_maps)
    btokens = bond_tokens(mol)
    ring_digit: dict[int, int] = {}
    free_digits = list(range(1, 100))
    out: list[str] = []
    spans: list[tuple[int, int, int]] = []
    pos = 0

    # pre-order emission; non-last children go in parentheses
    emit_stack: list[tuple[int, int]] = [(0, root)]  # (kind 0=atom 1=text, x)
    while emit_stack:
        kind, payload = emit_stack.pop()
        if kind:
            out.append("(" if payload == 0 else ")")
            pos += 1
            continue
        u = payload
        link = parent[u]
        if link is not None:
            p, bond = link
            sym = btokens[id(bond)][0 if bond.a == p else 1]
            if sym:
                out.append(sym)
                pos += len(sym)
        token = tokens[u]
        if want_spans:
            spans.append((u, pos, pos + len(token)))
        pos += len(token)
        out.append(token)
        for bond in ring_at[u]:
            key = id(bond)
            if key not in ring_digit:
                if not free_digits:
                    raise UnsupportedFeature("more than 99 open ring bonds")
                digit = free_digits.pop(0)
                ring_digit[key] = digit
                sym = btokens[key][0 if bond.a == u else 1]
                if sym:
                    out.append(sym)
                    pos += len(sym)
            else:
                digit = ring_digit.pop(key)
                free_digits.append(digit)
                free_digits.sort()
            d = str(digit) if digit < 10 else f"%{digit:02d}"
            out.append(d)
            pos += len(d)
        kids = children[u]
        if kids:
            pending: list[tuple[int, int]] = []
            for idx, v in enumerate(kids):
                if idx < len(kids) - 1:
                    pending += [(1, 0), (0, v), (1, 1)]
                else:
                    pending.append((0, v))
            emit_stack.extend(reversed(pending))

    return "".join(out), spans
