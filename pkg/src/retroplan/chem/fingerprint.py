"""Circular (Morgan-style) fingerprints and Tanimoto similarity.

Environment hashes are stable 64-bit blake2b digests of sorted
(bond order, neighbor hash) tuples, so fingerprints are identical across
platforms and atom numberings.
"""

from __future__ import annotations

import functools
import hashlib
import struct
from dataclasses import dataclass

from ..errors import InvalidParams, WidthMismatch
from .mol import Molecule

_ALLOWED_WIDTHS = (512, 1024, 2048, 4096)


def _h64(*parts: int | str | bool) -> int:
    payload = b"|".join(
        p.encode() if isinstance(p, str)
        else struct.pack(">Q", int(p) & 0xFFFFFFFFFFFFFFFF)
        for p in parts
    )
    return int.from_bytes(
        hashlib.blake2b(payload, digest_size=8).digest(), "big")


@dataclass(frozen=True)
class Fingerprint:
    bits: int
    n_bits: int
    radius: int

    def popcount(self) -> int:
        return bin(self.bits).count("1")

    def to_hex(self) -> str:
        return f"r{self.radius}b{self.n_bits}:{self.bits:0{self.n_bits // 4}x}"

    @staticmethod
    def from_hex(text: str) -> "Fingerprint":
        head, _, body = text.partition(":")
        if not head.startswith("r") or "b" not in head or not body:
            raise InvalidParams(f"bad fingerprint serialization {text[:20]!r}")
        radius_s, _, width_s = head[1:].partition("b")
        return Fingerprint(int(body, 16), int(width_s), int(radius_s))

    def to_bit_list(self) -> list[int]:
        return [(self.bits >> i) & 1 for i in range(self.n_bits)]


def circular_fingerprint(mol: Molecule, radius: int = 2,
                         n_bits: int = 2048) -> Fingerprint:
    if radius < 0 or n_bits not in _ALLOWED_WIDTHS:
        raise InvalidParams(
            f"radius must be >= 0 and n_bits one of {_ALLOWED_WIDTHS}")
    return _fingerprint_cached(mol, radius, n_bits)


@functools.lru_cache(maxsize=32768)
def _fingerprint_cached(mol: Molecule, radius: int, n_bits: int) -> Fingerprint:
    env = {
        i: _h64("atom", a.element, a.charge, a.hydrogens, a.aromatic,
                mol.degree(i))
        for i, a in enumerate(mol.atoms)
    }
    bits = 0
    for r in range(radius + 1):
        for h in env.values():
            bits |= 1 << (h % n_bits)
        if r == radius:
            break
        new_env = {}
        for i in env:
            parts: list[int | str] = ["env", env[i]]
            for order_sym, h in sorted(
                    (bond.order.value, env[v]) for v, bond in mol.neighbors[i]):
                parts.append(order_sym)
                parts.append(h)
            new_env[i] = _h64(*parts)
        env = new_env
    return Fingerprint(bits, n_bits, radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    if a.n_bits != b.n_bits:
        raise WidthMismatch(f"fingerprint widths differ: {a.n_bits} vs {b.n_bits}")
    union = a.bits | b.bits
    if union == 0:
        return 1.0
    inter = a.bits & b.bits
    return bin(inter).count("1") / bin(union).count("1")
