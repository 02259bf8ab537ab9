"""Exception types shared across the package.

Every error carries a stable ``code`` string so CLI and HTTP layers can emit
machine-readable failures without inspecting exception classes.
"""

from __future__ import annotations


class RetroplanError(Exception):
    """Base class for all package errors."""

    code = "error"

    def to_dict(self) -> dict:
        d = {"code": self.code, "message": str(self)}
        offset = getattr(self, "offset", None)
        if offset is not None:
            d["offset"] = offset
        return d


class SmilesParseError(RetroplanError):
    """Syntax or semantic error in a SMILES string; ``offset`` is a byte offset."""

    code = "smiles_parse_error"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EmptyInput(SmilesParseError):
    code = "empty_input"


class UnbalancedBranch(SmilesParseError):
    code = "unbalanced_branch"


class UnclosedRingBond(SmilesParseError):
    code = "unclosed_ring_bond"


class UnknownElement(SmilesParseError):
    code = "unknown_element"


class InvalidCharge(SmilesParseError):
    code = "invalid_charge"


class RingBondConflict(SmilesParseError):
    code = "ring_bond_conflict"


class DanglingBond(SmilesParseError):
    code = "dangling_bond"


class UnsupportedFeature(RetroplanError):
    code = "unsupported_feature"


class MoleculeInvariantError(RetroplanError):
    """Structural invariant violated at molecule construction."""

    code = "molecule_invariant"


class ValenceExceeded(MoleculeInvariantError):
    code = "valence_exceeded"


class InvalidParams(RetroplanError):
    code = "invalid_params"


class WidthMismatch(RetroplanError):
    code = "width_mismatch"


class NoMappedAtoms(RetroplanError):
    code = "no_mapped_atoms"


class ReactionInvariantError(RetroplanError):
    code = "reaction_invariant"


class InsufficientMatches(RetroplanError):
    code = "insufficient_matches"


class EmptySequence(RetroplanError):
    code = "empty_sequence"


class EmptyCenter(RetroplanError):
    code = "empty_center"


class NonPositiveComponent(RetroplanError):
    code = "non_positive_component"


class EmptyCorpus(RetroplanError):
    code = "empty_corpus"


class DegenerateData(RetroplanError):
    code = "degenerate_data"


class DuplicateRecord(RetroplanError):
    code = "duplicate_record"


class InvalidTarget(RetroplanError):
    code = "invalid_target"


class NoSolution(RetroplanError):
    code = "no_solution"


class IncompleteRoute(RetroplanError):
    code = "incomplete_route"


class SingleClass(RetroplanError):
    code = "single_class"


class ValidationFailed(RetroplanError):
    code = "validation_failed"


class NotFound(RetroplanError):
    code = "not_found"
